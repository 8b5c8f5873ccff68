//! gnuplot script emission.

use std::fmt::Write;

use crate::experiments::{ExperimentReport, Metric};

/// A gnuplot script with one PNG per series metric, reading
/// `<metric>.csv` from the script's directory. Semilog metrics get a log
/// y-axis, and a reference rate adds the line `v₀ e^{−rate (t − t₀)}`.
pub fn emit_plot_script(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script for experiment {}", report.name);
    let series: Vec<_> = report
        .metrics
        .iter()
        .filter_map(|(k, m)| match m {
            Metric::Series(x) if !x.t.is_empty() => Some((k, x)),
            _ => None,
        })
        .collect();
    if series.is_empty() {
        s.push_str("# no series metrics to plot\n");
        return s;
    }
    s.push_str("set datafile separator ','\nset key top right\nset xlabel 't'\nset terminal pngcairo size 800,500\n");
    for (name, x) in series {
        let _ = writeln!(s, "\nset output '{name}.png'");
        let _ = writeln!(s, "set title '{name}'");
        if x.semilog {
            s.push_str("set logscale y\n");
        } else {
            s.push_str("unset logscale y\n");
        }
        let mut line = format!("plot '{name}.csv' using 1:2 skip 1 with linespoints title '{name}'");
        if let Some(rate) = x.reference_rate {
            let (t0, v0) = (x.t[0], x.values[0]);
            let _ = write!(line, ", {v0:?}*exp(-{rate:?}*(x-{t0:?})) with lines dashtype 2 title 'rate {rate}'");
        }
        s.push_str(&line);
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_series_gets_log_axis_and_reference() {
        let mut r = ExperimentReport::new("vortex_entropy_decay", 0);
        r.series("entropy", vec![0.0, 1.0], vec![0.5, 0.07], true, Some(2.0));
        let s = emit_plot_script(&r);
        assert!(s.contains("set logscale y"));
        assert!(s.contains("'entropy.csv'"));
        assert!(s.contains("0.5*exp(-2.0*(x-0.0))"));
        assert_eq!(s, emit_plot_script(&r));
    }

    #[test]
    fn no_series_is_comment_only() {
        let mut r = ExperimentReport::new("x", 0);
        r.scalar("a", 1.0);
        assert!(emit_plot_script(&r).lines().all(|l| l.starts_with('#')));
    }
}

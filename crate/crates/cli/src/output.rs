//! CSV learning curves and the plain-text run summary.

use std::fmt::Write as _;

use nspe_core::metrics::MsdTrace;

pub const CSV_HEADER: &str = "iter,algorithm,msd_global_db,msd_local_db";

/// Formats like C's `%.9g`: nine significant digits, trailing zeros
/// removed, scientific notation outside `1e-4 <= |x| < 1e9`.
pub fn format_sig9(x: f64) -> String {
    const PRECISION: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    // Round to nine significant digits first; the exponent of the rounded
    // value decides the style.
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One row per (iteration, algorithm), iteration-major, algorithms in the
/// order given. Iterations are numbered from 1. LF line endings.
pub fn render_csv(traces: &[MsdTrace]) -> String {
    let mut out =
        String::with_capacity(64 * traces.iter().map(|t| t.iterations).sum::<usize>() + 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    let t_max = traces.iter().map(|t| t.iterations).max().unwrap_or(0);
    for i in 0..t_max {
        for trace in traces.iter().filter(|t| i < t.iterations) {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                i + 1,
                trace.algorithm,
                format_sig9(trace.msd_global_db[i]),
                format_sig9(trace.msd_local_db[i])
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nspe_core::AlgorithmKind;

    #[test]
    fn matches_c_percent_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-320.0, "-320"),
            (3.010299956639812, "3.01029996"),
            (-12.3456789012, "-12.3456789"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (999999999.7, "1e+09"),
            (-0.5, "-0.5"),
            (1e100, "1e+100"),
            (f64::NAN, "nan"),
        ];
        for (x, expected) in cases {
            assert_eq!(format_sig9(x), expected, "{x}");
        }
    }

    #[test]
    fn csv_layout() {
        let t = |algorithm| MsdTrace {
            algorithm,
            iterations: 2,
            msd_global_db: vec![1.0, 0.5],
            msd_local_db: vec![-320.0, 2.0],
            n_runs: 1,
        };
        let csv = render_csv(&[t(AlgorithmKind::CtaDnspe), t(AlgorithmKind::NonCooperative)]);
        assert_eq!(
            csv,
            "iter,algorithm,msd_global_db,msd_local_db\n\
             1,cta_dnspe,1,-320\n\
             1,non_cooperative,1,-320\n\
             2,cta_dnspe,0.5,2\n\
             2,non_cooperative,0.5,2\n"
        );
    }
}

//! CSV rendering: comma-separated, `\n`-terminated, lowercase scientific
//! notation with 12 significant digits.

use std::fmt::Write as _;

use vcoher::bistability::OBCurve;
use vcoher::model::COMPONENT_NAMES;
use vcoher::oracle::Trajectory;
use vcoher::response::SpectrumPoint;
use vcoher::solver::HarmonicSolution;

pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn row(out: &mut String, fields: &[f64]) {
    let line = fields.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",");
    out.push_str(&line);
    out.push('\n');
}

pub fn spectrum(points: &[SpectrumPoint]) -> String {
    let mut out = String::from("delta_p,re_s,im_s,abs,disp\n");
    for p in points {
        row(&mut out, &[p.detuning, p.s.re, p.s.im, p.absorption, p.dispersion]);
    }
    out
}

pub fn group_index(values: &[(f64, f64)]) -> String {
    let mut out = String::from("delta_p,ng_minus_1\n");
    for &(x, v) in values {
        row(&mut out, &[x, v]);
    }
    out
}

pub fn ob(curve: &OBCurve) -> String {
    let mut out = String::from("x,abs_y,re_y,im_y\n");
    for p in &curve.points {
        row(&mut out, &[p.x, p.y_abs, p.y.re, p.y.im]);
    }
    let tps = if curve.turning_points.is_empty() {
        "none".to_string()
    } else {
        curve
            .turning_points
            .iter()
            .map(|t| num(t.x))
            .collect::<Vec<_>>()
            .join(",")
    };
    let _ = writeln!(out, "# turning_points: {tps}");
    out
}

pub fn harmonics(sol: &HarmonicSolution) -> String {
    let mut out = String::from("k,component,re,im\n");
    for (k, v) in sol.iter() {
        for (a, name) in COMPONENT_NAMES.iter().enumerate() {
            let _ = writeln!(out, "{k},{name},{},{}", num(v[a].re), num(v[a].im));
        }
    }
    out
}

pub fn trajectory(traj: &Trajectory) -> String {
    let mut header = String::from("t");
    for i in 1..=3 {
        for j in 1..=3 {
            let _ = write!(header, ",re_rho{i}{j},im_rho{i}{j}");
        }
    }
    let mut out = header;
    out.push('\n');
    for (t, m) in traj.times.iter().zip(&traj.states) {
        let mut fields = vec![*t];
        for i in 0..3 {
            for j in 0..3 {
                fields.push(m[(i, j)].re);
                fields.push(m[(i, j)].im);
            }
        }
        row(&mut out, &fields);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use vcoher::C64;
    use vcoher::response::ResponseScale;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(num(2.5e7), "2.50000000000e7");
    }

    #[test]
    fn spectrum_layout() {
        let p = SpectrumPoint::new(-1.0, C64::new(0.5, 0.25), &ResponseScale::default());
        let text = spectrum(&[p]);
        assert_eq!(
            text,
            "delta_p,re_s,im_s,abs,disp\n-1.00000000000e0,5.00000000000e-1,2.50000000000e-1,2.50000000000e-1,5.00000000000e-1\n"
        );
        assert!(!text.contains(",\n"));
    }
}

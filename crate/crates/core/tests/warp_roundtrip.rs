use plumbline::model::{correct_point, DistortionParams};
use plumbline::raster::GrayImage;
use plumbline::synth::{render_lines, Line};
use plumbline::warp::{sample_bicubic, undistort_image};

const W: usize = 256;
const H: usize = 192;

fn pattern(x: f64, y: f64) -> f64 {
    0.5 + 0.2 * (x * 0.11).sin() * (y * 0.07).cos() + 0.15 * ((x + 2.0 * y) * 0.05).sin()
}

/// Resamples `img` so that pixel `x` shows the scene at `correct_point(p, x)`.
fn distort(img: &GrayImage, p: &DistortionParams) -> (GrayImage, Vec<bool>) {
    let mut covered = vec![false; img.width() * img.height()];
    let out = GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let src = correct_point(p, [x as f64, y as f64]).ok();
        match src.and_then(|s| sample_bicubic(img, s[0], s[1])) {
            Some(v) => {
                covered[y * img.width() + x] = true;
                v.clamp(0.0, 1.0)
            }
            None => 0.0,
        }
    });
    (out, covered)
}

#[test]
fn round_trip_psnr_exceeds_35_db() {
    let original = GrayImage::from_fn(W, H, |x, y| pattern(x as f64, y as f64));
    let centre = [W as f64 / 2.0, H as f64 / 2.0];
    let rho2 = centre[0] * centre[0] + centre[1] * centre[1];
    for k in [-0.2, -0.1, 0.1, 0.2] {
        let p = DistortionParams::radial(centre, k / rho2);
        let (bent, _) = distort(&original, &p);
        let back = undistort_image(&bent, &p, W, H);
        let mut se = 0.0;
        let mut n = 0usize;
        for y in 8..H - 8 {
            for x in 8..W - 8 {
                if !back.coverage[y * W + x] {
                    continue;
                }
                let d = back.image.get(x, y) - original.get(x, y);
                se += d * d;
                n += 1;
            }
        }
        assert!(n > W * H / 3, "only {n} covered pixels");
        let psnr = 10.0 * (1.0 / (se / n as f64)).log10();
        assert!(psnr > 35.0, "γρ² = {k}: PSNR {psnr:.1} dB");
    }
}

fn ridge_deviation(img: &GrayImage, lines: &[Line]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, l) in lines.iter().enumerate() {
        let (a, b) = l.clip(img.width() as f64, img.height() as f64).unwrap();
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let mut pts = Vec::new();
        let mut s = 4.0;
        while s < len - 4.0 {
            let q = [a[0] + (b[0] - a[0]) * s / len, a[1] + (b[1] - a[1]) * s / len];
            s += 2.0;
            if lines
                .iter()
                .enumerate()
                .any(|(j, o)| j != i && o.distance(q).abs() < 12.0)
            {
                continue;
            }
            let mut mass = 0.0;
            let mut moment = 0.0;
            let mut inside = true;
            for k in -24..=24 {
                let t = k as f64 * 0.25;
                match sample_bicubic(img, q[0] + l.normal[0] * t, q[1] + l.normal[1] * t) {
                    Some(v) => {
                        mass += v;
                        moment += v * t;
                    }
                    None => inside = false,
                }
            }
            if inside && mass > 1.0 {
                let t = moment / mass;
                pts.push([q[0] + l.normal[0] * t, q[1] + l.normal[1] * t]);
            }
        }
        assert!(pts.len() > 20, "line {i}: {} samples", pts.len());
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &pts {
            let (dx, dy) = (p[0] - mx, p[1] - my);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let nn = [-phi.sin(), phi.cos()];
        for p in &pts {
            worst = worst.max(((p[0] - mx) * nn[0] + (p[1] - my) * nn[1]).abs());
        }
    }
    worst
}

#[test]
fn undistorting_with_the_true_model_straightens_lines() {
    let centre = [W as f64 / 2.0, H as f64 / 2.0];
    let rho2 = centre[0] * centre[0] + centre[1] * centre[1];
    let truth = DistortionParams::radial(centre, -0.15 / rho2);
    let lines: Vec<Line> = [(15.0f64, 70.0), (100.0, -50.0), (60.0, 60.0), (150.0, -70.0)]
        .iter()
        .map(|&(deg, off)| {
            let n = [deg.to_radians().cos(), deg.to_radians().sin()];
            Line {
                normal: n,
                offset: n[0] * centre[0] + n[1] * centre[1] + off,
            }
        })
        .collect();
    let bent = render_lines(W, H, &lines, &truth, 1.5);
    assert!(ridge_deviation(&bent, &lines) > 1.0, "render is not visibly curved");
    let fixed = undistort_image(&bent, &truth, W, H);
    let dev = ridge_deviation(&fixed.image, &lines);
    assert!(dev < 0.5, "max deviation {dev:.3} px");
}

use std::f64::consts::PI;

use plumbline::edgels::{extract_edgels, ExtractionConfig};
use plumbline::hough::hough_1d;
use plumbline::model::DistortionParams;
use plumbline::raster::GrayImage;
use plumbline::synth::{render_lines, Line};

fn line(angle_deg: f64, through: [f64; 2]) -> Line {
    let a = angle_deg.to_radians();
    let normal = [a.cos(), a.sin()];
    Line {
        normal,
        offset: normal[0] * through[0] + normal[1] * through[1],
    }
}

fn five_lines() -> Vec<Line> {
    vec![
        line(10.0, [60.0, 128.0]),
        line(95.0, [128.0, 40.0]),
        line(50.0, [180.0, 180.0]),
        line(140.0, [90.0, 200.0]),
        line(170.0, [210.0, 100.0]),
    ]
}

fn render(lines: &[Line]) -> GrayImage {
    render_lines(256, 256, lines, &DistortionParams::identity([128.0, 128.0]), 1.0)
}

#[test]
fn edgels_sit_on_rendered_lines() {
    let lines = five_lines();
    let edgels = extract_edgels(&render(&lines), &ExtractionConfig::default()).unwrap();
    assert!(edgels.len() > 500, "only {} edgels", edgels.len());
    let max_sin = 15f64.to_radians().sin();
    let good = edgels
        .iter()
        .filter(|e| {
            let l = lines
                .iter()
                .min_by(|a, b| a.distance(e.position).abs().total_cmp(&b.distance(e.position).abs()))
                .unwrap();
            let cross = e.normal[0] * l.normal[1] - e.normal[1] * l.normal[0];
            l.distance(e.position).abs() <= 2.0 && cross.abs() <= max_sin
        })
        .count();
    let frac = good as f64 / edgels.len() as f64;
    assert!(frac >= 0.95, "{good}/{} on a line", edgels.len());
}

#[test]
fn extraction_is_deterministic_across_thread_counts() {
    let img = render(&five_lines());
    let cfg = ExtractionConfig {
        target_edgels: 2000,
        rng_seed: 7,
        ..Default::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| extract_edgels(&img, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.position, y.position);
        assert_eq!(x.normal.map(f64::to_bits), y.normal.map(f64::to_bits));
        assert_eq!(x.weight.to_bits(), y.weight.to_bits());
    }
    let again = run(1);
    assert_eq!(a, again);
}

#[test]
fn subsampling_respects_cell_quota() {
    let img = render(&five_lines());
    let cfg = ExtractionConfig {
        target_edgels: 256,
        grid_cells: 4,
        ..Default::default()
    };
    let edgels = extract_edgels(&img, &cfg).unwrap();
    let mut counts = [0usize; 16];
    for e in &edgels {
        let cx = e.position[0] as usize * 4 / 256;
        let cy = e.position[1] as usize * 4 / 256;
        counts[cy * 4 + cx] += 1;
    }
    assert!(counts.iter().all(|&c| c <= cfg.cell_quota()), "{counts:?}");
    assert!(edgels.iter().all(|e| e.weight > 0.0));
}

#[test]
fn quarter_turn_rotates_dominant_normal() {
    let bins = 360;
    let img = render(&[line(20.0, [128.0, 128.0])]);
    let rotated = GrayImage::from_fn(256, 256, |x, y| img.get(y, 255 - x));
    let dominant = |img: &GrayImage| {
        let e = extract_edgels(img, &ExtractionConfig::default()).unwrap();
        let h = hough_1d(&e, bins).unwrap();
        h.bins()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0
    };
    let (a, b) = (dominant(&img), dominant(&rotated));
    let shift = (b + bins - a) % bins;
    let quarter = bins / 2;
    assert!(shift.abs_diff(quarter) <= 1, "bins {a} -> {b}");
    let theta = a as f64 * PI / bins as f64;
    assert!((theta - 20f64.to_radians()).abs() < 15f64.to_radians(), "θ = {theta:.3}");
}

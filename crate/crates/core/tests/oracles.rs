mod common;

use common::*;
use morphsi::diagrams::{export_csv, si_diagram, si_diagram_with, Granulometry};
use morphsi::measures::{measure_mstar, Aggregation};
use morphsi::morphology::apply_filter;
use morphsi::noise::{add_salt_pepper, NoiseSpec};
use morphsi::optimizer::{evolve, fitness, history_to_csv, GaConfig, Genome, WORST_FITNESS};
use morphsi::selection::{
    report_from_json, report_to_json, select_filter, select_filter_with_images, Winner,
};
use morphsi::{FilterSpec, Image, MorphOp, Shape};

#[derive(serde::Deserialize)]
struct CsvCell {
    r: usize,
    k: usize,
    count: u64,
}

#[test]
fn csv_parses_back_to_the_diagram() {
    let mut rng = TestRng::new(11);
    let img = random_image(&mut rng, 23, 19);
    for cumulative in [false, true] {
        let d = si_diagram(&img, 5, Shape::Disk, cumulative);
        let bytes = export_csv(&d);
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(bytes.as_slice());
        let cells: Vec<CsvCell> = reader.deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(cells.len(), 6 * 256);
        for cell in cells {
            assert_eq!(cell.count, d.get(cell.r, cell.k));
        }
        let first = std::str::from_utf8(&bytes).unwrap().lines().next().unwrap();
        assert_eq!(first, format!("# cumulative={cumulative}"));
    }
}

#[test]
fn closing_diagram_uses_closings() {
    let mut rng = TestRng::new(12);
    let img = random_image(&mut rng, 15, 15);
    let d = si_diagram_with(&img, 3, Shape::Cross, false, Granulometry::Closing);
    for r in 0..=3 {
        assert_eq!(
            d.row(r).to_vec(),
            brute_hist(&brute_close(&img, Shape::Cross, r))
        );
    }
}

/// Centre of size `n` composed from the brute-force operators.
fn brute_center(img: &Image, n: usize) -> Image {
    let shape = Shape::Square;
    let mut p1 = img.clone();
    let mut p2 = img.clone();
    for i in 1..=n {
        p1 = brute_close(&brute_open(&p1, shape, i), shape, i);
        p2 = brute_open(&brute_close(&p2, shape, i), shape, i);
    }
    Image::from_fn(img.width(), img.height(), |x, y| {
        let (a, b, f) = (p1.get(x, y), p2.get(x, y), img.get(x, y));
        f.max(a.min(b)).min(a.max(b))
    })
}

#[test]
fn select_on_8x8_matches_composed_arithmetic() {
    let mut rng = TestRng::new(13);
    for case in 0..10 {
        let clean = random_image(&mut rng, 8, 8);
        let noisy = add_salt_pepper(&clean, &NoiseSpec::new(0.2, case).unwrap());
        let ft1 = brute_center(&noisy, 1);
        let ft2 = brute_center(&noisy, 2);
        let want = [
            brute_mstar(&noisy, &ft1, &ft2, 3, Shape::Square, true),
            brute_mstar(&noisy, &ft2, &ft1, 3, Shape::Square, true),
        ];
        let rep = select_filter(
            &noisy,
            &FilterSpec::center(1, Shape::Square),
            &FilterSpec::center(2, Shape::Square),
            3,
            Shape::Square,
            Aggregation::ElementwiseVolume,
        )
        .unwrap();
        assert_eq!(rep.mstar_values, want, "case {case}");
        let winner = match want[0].cmp(&want[1]) {
            std::cmp::Ordering::Less => Winner::First,
            std::cmp::Ordering::Greater => Winner::Second,
            std::cmp::Ordering::Equal => Winner::Tie,
        };
        assert_eq!(rep.winner, winner);
        assert_eq!(rep.degenerate, ft1 == noisy || ft2 == noisy);
    }
}

#[test]
fn swapping_candidates_swaps_the_report() {
    let mut rng = TestRng::new(14);
    let noisy = random_image(&mut rng, 30, 24);
    let a = FilterSpec::parse("asf-oc:2", Shape::Disk).unwrap();
    let b = FilterSpec::parse("seq:close@1,open@3", Shape::Disk).unwrap();
    for agg in [
        Aggregation::ElementwiseVolume,
        Aggregation::PerRScalarProduct,
    ] {
        let ab = select_filter(&noisy, &a, &b, 6, Shape::Disk, agg).unwrap();
        let ba = select_filter(&noisy, &b, &a, 6, Shape::Disk, agg).unwrap();
        assert_eq!(ab.mstar_values, [ba.mstar_values[1], ba.mstar_values[0]]);
        assert_eq!(ab.winner, ba.winner.swapped());
        assert_eq!(ab.m_family_cross, ba.m_family_cross);
    }
}

#[test]
fn shared_cross_term_matches_separate_computation() {
    let mut rng = TestRng::new(15);
    let noisy = random_image(&mut rng, 28, 28);
    let a = FilterSpec::center(1, Shape::Square);
    let b = FilterSpec::center(3, Shape::Square);
    let (rep, images) = select_filter_with_images(
        &noisy,
        &a,
        &b,
        5,
        Shape::Square,
        Aggregation::ElementwiseVolume,
    )
    .unwrap();
    let m1 = measure_mstar(
        &noisy,
        &images.ft1,
        &images.ft2,
        5,
        Shape::Square,
        Aggregation::ElementwiseVolume,
    )
    .unwrap();
    let m2 = measure_mstar(
        &noisy,
        &images.ft2,
        &images.ft1,
        5,
        Shape::Square,
        Aggregation::ElementwiseVolume,
    )
    .unwrap();
    assert_eq!(rep.mstar_values, [m1, m2]);
}

#[test]
fn report_json_round_trip_on_real_run() {
    let mut rng = TestRng::new(16);
    let noisy = random_image(&mut rng, 20, 20);
    let rep = select_filter(
        &noisy,
        &FilterSpec::center(1, Shape::Cross),
        &FilterSpec::parse("asf-co:2", Shape::Cross).unwrap(),
        4,
        Shape::Cross,
        Aggregation::PerRScalarProduct,
    )
    .unwrap();
    assert_eq!(report_from_json(&report_to_json(&rep)).unwrap(), rep);
}

#[test]
fn noise_rate_is_binomial() {
    let img = Image::filled(256, 256, 100);
    let (n, p) = (65536.0f64, 0.25);
    let sigma = (n * p * (1.0 - p)).sqrt();
    for seed in 0..5 {
        let out = add_salt_pepper(&img, &NoiseSpec::new(p, seed).unwrap());
        let changed = out.pixels().iter().filter(|&&v| v != 100).count() as f64;
        let salt = out.pixels().iter().filter(|&&v| v == 255).count() as f64;
        assert!(
            (changed - n * p).abs() <= 3.0 * sigma,
            "seed {seed}: {changed}"
        );
        // Salt and pepper split evenly among corrupted pixels.
        let half_sigma = (changed * 0.25).sqrt();
        assert!(
            (salt - changed / 2.0).abs() <= 3.0 * half_sigma,
            "seed {seed}: {salt} of {changed}"
        );
        assert!(out.pixels().iter().all(|&v| v == 100 || v == 0 || v == 255));
    }
}

#[test]
fn noise_extremes() {
    let mut rng = TestRng::new(17);
    let img = random_image(&mut rng, 17, 9);
    assert_eq!(add_salt_pepper(&img, &NoiseSpec::new(0.0, 3).unwrap()), img);
    let full = add_salt_pepper(&img, &NoiseSpec::new(1.0, 3).unwrap());
    assert!(full.pixels().iter().all(|&v| v == 0 || v == 255));
    assert_ne!(
        add_salt_pepper(&img, &NoiseSpec::new(0.5, 1).unwrap()),
        add_salt_pepper(&img, &NoiseSpec::new(0.5, 2).unwrap())
    );
}

fn small_noisy() -> Image {
    let clean = load_test_image();
    let crop = Image::from_fn(64, 64, |x, y| clean.get(x + 96, y + 96));
    add_salt_pepper(&crop, &NoiseSpec::new(0.1, 5).unwrap())
}

#[test]
fn evolve_reaches_exhaustive_minimum_on_small_spaces() {
    let noisy = small_noisy();
    for (max_stages, max_se_size) in [(1, 3), (2, 2)] {
        let cfg = GaConfig {
            max_stages,
            max_se_size,
            r_max: 6,
            seed: 21,
            ..GaConfig::default()
        };
        let genes: Vec<(MorphOp, usize)> = [MorphOp::Open, MorphOp::Close]
            .into_iter()
            .flat_map(|op| (1..=max_se_size).map(move |s| (op, s)))
            .collect();
        let mut space: Vec<Vec<(MorphOp, usize)>> = genes.iter().map(|&g| vec![g]).collect();
        if max_stages == 2 {
            for &a in &genes {
                for &b in &genes {
                    space.push(vec![a, b]);
                }
            }
        }
        let best = space
            .into_iter()
            .map(|ops| fitness(&Genome::new(ops, &cfg).unwrap(), &noisy, &cfg).unwrap())
            .min()
            .unwrap();
        let run = evolve(&noisy, &cfg).unwrap();
        assert_eq!(
            run.best_fitness, best,
            "{max_stages} stages, size {max_se_size}"
        );
        assert!(run.best.is_valid(&cfg));
        assert!(run
            .history
            .windows(2)
            .all(|w| w[1].best_fitness <= w[0].best_fitness));
    }
}

#[test]
fn fitness_agrees_with_selection() {
    let clean = load_test_image();
    let noisy = add_salt_pepper(&clean, &NoiseSpec::new(0.1, 42).unwrap());
    // A one-step sequence is the same filter whichever way it is written.
    let cfg = GaConfig {
        reference_spec: FilterSpec::center(2, Shape::Square),
        ..GaConfig::default()
    };
    let genome = Genome::new(vec![(MorphOp::Close, 2)], &cfg).unwrap();
    let rep = select_filter(
        &noisy,
        &genome.to_spec(Shape::Square),
        &cfg.reference_spec,
        cfg.r_max,
        Shape::Square,
        cfg.aggregation,
    )
    .unwrap();
    assert_eq!(fitness(&genome, &noisy, &cfg).unwrap(), rep.mstar_values[0]);
}

#[test]
fn identity_genome_gets_the_sentinel() {
    let flat = Image::filled(12, 12, 90);
    let cfg = GaConfig::default();
    let genome = Genome::new(vec![(MorphOp::Open, 2)], &cfg).unwrap();
    assert_eq!(
        apply_filter(&flat, &genome.to_spec(Shape::Square)).unwrap(),
        flat
    );
    assert_eq!(fitness(&genome, &flat, &cfg).unwrap(), WORST_FITNESS);
}

#[test]
fn same_seed_gives_same_history_csv() {
    let noisy = small_noisy();
    let cfg = GaConfig {
        population_size: 8,
        generations: 6,
        r_max: 4,
        seed: 99,
        ..GaConfig::default()
    };
    let a = evolve(&noisy, &cfg).unwrap();
    let b = evolve(&noisy, &cfg).unwrap();
    assert_eq!(history_to_csv(&a.history), history_to_csv(&b.history));
    assert_eq!(a.best, b.best);
    let text = String::from_utf8(history_to_csv(&a.history)).unwrap();
    assert!(text.starts_with("generation,best_fitness,mean_fitness"));
    assert_eq!(text.lines().count(), 1 + a.history.len());
}

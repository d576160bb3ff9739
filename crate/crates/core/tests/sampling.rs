use cmab::{ArmSpec, BanditInstance, Distribution, SampleStream};

fn instance(reward: Distribution, cost: Distribution) -> BanditInstance {
    BanditInstance::new(
        vec![ArmSpec::new(reward, cost), ArmSpec::constant(0.1, 0.0)],
        0.5,
    )
    .unwrap()
}

#[test]
fn bernoulli_law_of_large_numbers() {
    let inst = instance(
        Distribution::Bernoulli { p: 0.3 },
        Distribution::Bernoulli { p: 0.4 },
    );
    let mut s = SampleStream::new(&inst, 7, 0);
    let n = 100_000;
    let mean = (0..n).map(|_| s.draw(0).0).sum::<f64>() / n as f64;
    assert!((mean - 0.3).abs() < 0.01, "{mean}");
}

#[test]
fn reward_and_cost_are_uncorrelated() {
    let inst = instance(
        Distribution::Beta {
            alpha: 2.0,
            beta: 3.0,
        },
        Distribution::Uniform { lo: 0.1, hi: 0.9 },
    );
    let mut s = SampleStream::new(&inst, 11, 3);
    let n = 100_000;
    let pairs: Vec<(f64, f64)> = (0..n).map(|_| s.draw(0)).collect();
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (mx / n as f64, my / n as f64);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let r = sxy / (sxx * syy).sqrt();
    assert!(r.abs() < 0.02, "{r}");
}

#[test]
fn sample_means_match_declared_means() {
    let kinds = [
        Distribution::Bernoulli { p: 0.35 },
        Distribution::Beta {
            alpha: 0.7,
            beta: 1.9,
        },
        Distribution::Uniform { lo: 0.2, hi: 0.65 },
        Distribution::Constant { value: 0.42 },
    ];
    let n = 1_000_000;
    for d in kinds {
        let inst = instance(d, d);
        let mut s = SampleStream::new(&inst, 5, 1);
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let (x, y) = s.draw(0);
            assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
            sx += x;
            sy += y;
        }
        let se = (d.variance() / n as f64).sqrt();
        let tol = (3.0 * se).max(1e-9 * d.mean());
        assert!((sx / n as f64 - d.mean()).abs() <= tol, "{d:?} reward");
        assert!((sy / n as f64 - d.mean()).abs() <= tol, "{d:?} cost");
    }
}

#[test]
fn streams_replay_and_are_per_arm() {
    let inst = BanditInstance::new(
        vec![
            ArmSpec::bernoulli(0.5, 0.5),
            ArmSpec::new(
                Distribution::Beta {
                    alpha: 1.0,
                    beta: 1.0,
                },
                Distribution::Bernoulli { p: 0.2 },
            ),
        ],
        0.5,
    )
    .unwrap();
    let mut a = SampleStream::new(&inst, 99, 4);
    let mut b = SampleStream::new(&inst, 99, 4);
    let seq_a: Vec<_> = (0..200).map(|i| a.draw(i % 2)).collect();
    // interleaving differently must not change arm 1's sample sequence
    let mut b_arm1 = Vec::new();
    for _ in 0..100 {
        b_arm1.push(b.draw(1));
    }
    let a_arm1: Vec<_> = seq_a.iter().skip(1).step_by(2).copied().collect();
    assert_eq!(a_arm1, b_arm1);
    let mut c = SampleStream::new(&inst, 99, 5);
    let seq_c: Vec<_> = (0..200).map(|i| c.draw(i % 2)).collect();
    assert_ne!(seq_a, seq_c);
}

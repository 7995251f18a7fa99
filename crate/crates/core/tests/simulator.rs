use erlangb_learn::harness::{measure_regret, PolicyKind, RunConfig};
use erlangb_learn::policy::{AdmissionPolicy, ExplorationSchedule, MlePolicy, Observation, Variant};
use erlangb_learn::{couple_systems, ModelParams, RandomStreams, SimMode, Simulator};

fn params(lambda: f64, mu: f64) -> ModelParams {
    ModelParams::new(lambda, mu, 5, 1.0, 1.3).unwrap()
}

#[test]
fn thinned_departures_have_binomial_mean() {
    let streams = RandomStreams::new(17);
    let p = -(-2f64.ln()).exp_m1();
    let n = 100_000u64;
    let total: u64 = (0..n)
        .map(|i| u64::from(streams.thinned_departures(i, 0, 3, p)))
        .sum();
    let mean = total as f64 / n as f64;
    assert!((mean - 1.5).abs() < 0.02, "mean {mean}");
}

#[test]
fn thinning_with_no_jobs_has_no_departures() {
    let streams = RandomStreams::new(2);
    assert!((0..1000).all(|i| streams.thinned_departures(i, 0, 0, 0.7) == 0));
}

#[test]
fn sample_count_follows_geometric_tail() {
    let mut sim = Simulator::new(params(2.0, 1.0), SimMode::Event, RandomStreams::new(4));
    let n = 200_000;
    let mut samples = 0usize;
    let mut seen_quarter = false;
    for _ in 0..n {
        let (s, out) = sim.advance_with_sampling(0.1, 0).unwrap();
        let total: f64 = s.iter().map(|r| r.inter_arrival).sum::<f64>() + out.record.inter_arrival;
        assert_eq!(s.len(), (total / 0.1).floor() as usize);
        if (0.2..0.3).contains(&total) {
            assert_eq!(s.len(), 2);
            seen_quarter = true;
        }
        samples += s.len();
    }
    let want = (-0.2f64).exp() / (1.0 - (-0.2f64).exp());
    let got = samples as f64 / n as f64;
    assert!((got - want).abs() < 0.01 * want, "{got} vs {want}");
    assert!(seen_quarter);
}

#[test]
fn simulation_is_deterministic() {
    let run = |mode| {
        let mut sim = Simulator::new(params(5.0, 2.0), mode, RandomStreams::new(77));
        (0..5000)
            .map(|i| {
                let admit = !sim.is_full() && i % 3 != 0;
                sim.step(admit).unwrap().record
            })
            .collect::<Vec<_>>()
    };
    for mode in [SimMode::Event, SimMode::Thinning] {
        assert_eq!(run(mode), run(mode));
    }
}

#[test]
fn coupled_always_admit_pair_is_identical() {
    let p = params(5.0, 2.0);
    let s = RandomStreams::new(9);
    let mut pair = couple_systems(
        Simulator::new(p, SimMode::Event, s),
        Simulator::new(p, SimMode::Event, s),
    )
    .unwrap();
    let mut solo = Simulator::new(p, SimMode::Event, s);
    for _ in 0..20_000 {
        let admit = !pair.a.is_full();
        let (sa, sb) = pair.admit(admit, admit).unwrap();
        assert_eq!(sa, sb);
        let (oa, ob) = pair.advance(u8::from(admit), u8::from(admit)).unwrap();
        assert_eq!(oa, ob);
        assert_eq!(solo.step(admit).unwrap(), oa);
    }
}

#[test]
fn always_admit_dominates_learning_policy() {
    for (mu, seed) in [(2.05, 1u64), (2.05, 2), (1.05, 3), (3.0, 4)] {
        let p = params(5.0, mu);
        let s = RandomStreams::new(seed);
        let mut pair = couple_systems(
            Simulator::new(p, SimMode::Event, s),
            Simulator::new(p, SimMode::Event, s),
        )
        .unwrap();
        let mut policy = MlePolicy::new(p.theta(), Variant::Alg1, ExplorationSchedule::PolyPower(1.0), s.exploration());
        for n in 0..10_000 {
            assert!(pair.b.busy() >= pair.a.busy(), "mu {mu}, arrival {n}");
            let a = policy.decide(pair.a.busy(), 5);
            let b = !pair.b.is_full();
            pair.admit(a == 1, b).unwrap();
            let (oa, _) = pair.advance(a, u8::from(b)).unwrap();
            policy.observe(Observation::Arrival(oa.record)).unwrap();
            let ids_b: Vec<u64> = pair.b.jobs().iter().map(|j| j.id).collect();
            assert!(pair.a.jobs().iter().all(|j| ids_b.contains(&j.id)));
        }
    }
}

#[test]
fn thinning_regret_matches_event_regret_in_law() {
    // Below threshold the regret is the acceptance count; both modes must
    // agree statistically.
    let p = params(5.0, 1.05);
    let mut cfg = RunConfig::new(p, PolicyKind::Alg1, ExplorationSchedule::ExpPower(0.4), 2000, 200, 5);
    let event = measure_regret(&cfg).unwrap();
    cfg.sim_mode = SimMode::Thinning;
    let thin = measure_regret(&cfg).unwrap();
    let se = ((event.std_regret.last().unwrap().powi(2) + thin.std_regret.last().unwrap().powi(2)) / 200.0).sqrt();
    assert!((event.final_mean() - thin.final_mean()).abs() < 4.0 * se);
}

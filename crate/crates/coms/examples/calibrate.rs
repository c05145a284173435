use coms::data::{spiral_generate, PriorSpec, SpiralSpec};
use coms::eval::evaluate;
use coms::plot::{mean_alignment_to_origin, quiver_grid};
use coms::sampling::*;
use coms::training::{train_com, train_oracle, TrainConfig, TrainVariant};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args[1].parse().unwrap();
    let lr: f64 = args[2].parse().unwrap();
    let steps: usize = args[3].parse().unwrap();
    let seed: u64 = args[4].parse().unwrap();
    let batch: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(64);
    let alpha: f64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(50.0);
    let neg_start: f64 = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(0.02);

    let spec = SpiralSpec { n: 1000, seed, ..SpiralSpec::default() };
    let data = spiral_generate(&spec).unwrap();
    let t0 = Instant::now();
    let energy = train_com(&TrainConfig {
        variant: TrainVariant::Stochastic, alpha, epochs, learning_rate: lr, seed,
        batch_size: batch, neg_sched_start: neg_start, ..TrainConfig::default()
    }, &data).unwrap();
    let oracle = train_oracle(&TrainConfig { seed: seed + 1000, ..TrainConfig::default() }, &data).unwrap();
    eprintln!("seed {seed}: train {:.0}s (epochs {epochs}, lr {lr})", t0.elapsed().as_secs_f64());

    let a0 = mean_alignment_to_origin(&quiver_grid(&oracle.field, 25, -1.5, 2.0), 0.5);
    let a50 = mean_alignment_to_origin(&quiver_grid(&energy.field, 25, -1.5, 2.0), 0.5);
    eprintln!("  C7: alpha0 {a0:.3} alpha50 {a50:.3}  ->  {}", if a0 > 0.5 && a50 < a0 { "ok" } else { "FAIL" });

    let sched = GeometricSchedule::new(0.1, 1e-5, steps).unwrap();
    let prior = ChainInit::Prior(PriorSpec::default());
    let t1 = Instant::now();
    let asc = sample_batch(&SamplerSpec { sampler: SamplerKind::GradientAscent { eps: 0.01, steps }, init: prior.clone(), seed: seed + 10 }, &energy.field, None, 256, None).unwrap();
    let lan = sample_batch(&SamplerSpec { sampler: SamplerKind::Langevin { schedule: sched }, init: prior.clone(), seed: seed + 10 }, &energy.field, None, 256, None).unwrap();
    let da = evaluate(&asc, &spec, 0.1).unwrap().diversity;
    let dl = evaluate(&lan, &spec, 0.1).unwrap().diversity;
    eprintln!("  C5: ascent {da:.3} langevin {dl:.3}  ->  {}", if da < dl { "ok" } else { "FAIL" });

    let mut mvr = Vec::new();
    for w in [0.0, 5.0, 10.0] {
        let s = sample_batch(&SamplerSpec {
            sampler: SamplerKind::TiltedLangevin { schedule: sched, tilt_weight: w },
            init: prior.clone(), seed: seed + 20,
        }, &energy.field, Some(&oracle.field), 256, None).unwrap();
        let rep = evaluate(&s, &spec, 0.1).unwrap();
        eprintln!("  C6 w={w}: validity {:.3} mvr {:.3}", rep.validity_rate, rep.mean_valid_reward);
        mvr.push((rep.validity_rate, rep.mean_valid_reward));
    }
    let ok = mvr.iter().all(|x| x.0 >= 0.5) && mvr[2].1 - mvr[0].1 >= 0.1;
    eprintln!("  C6 -> {}  ({:.0}s sampling)", if ok { "ok" } else { "FAIL" }, t1.elapsed().as_secs_f64());
}

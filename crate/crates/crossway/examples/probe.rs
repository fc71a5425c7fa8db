//! Scratch diagnostics for calibration runs (not part of the test suite).

use crossway::coordinator::Command;
use crossway::experiments::{
    aggregate_stats, four_av_worked_case, gen_four_av_cases, gen_limit_grid, gen_uniform_cases,
    two_vehicle_spec, uniform_stats,
};
use crossway::game::Strategy;
use crossway::run_batch;
use crossway::sim::run_scenario;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "baseline".into());
    match which.as_str() {
        "baseline" => baseline(),
        "seeds" => seeds(),
        "table1" => table1(),
        "fourav" => fourav(),
        "fourav-stats" => fourav_stats(),
        "uniform" => uniform(),
        other => eprintln!("unknown probe {other}"),
    }
}

fn seeds() {
    for seed in 0..40u64 {
        let spec = two_vehicle_spec(60.0, 60.0, 40.0 / 3.6, 40.0 / 3.6, seed);
        let r = run_scenario(&spec);
        let first = r.decisions.first().unwrap().chosen;
        // Which agent yielded first, and when did it re-accelerate?
        let yielder = if first.host == Strategy::Decelerate { 0 } else { 1 };
        let flip = r
            .commands
            .iter()
            .filter(|c| c.agent == yielder && c.t > 0.4)
            .find(|c| c.command == Command::Accelerate)
            .map(|c| c.t);
        println!(
            "seed={seed:2} first=({:?},{:?}) yielder={yielder} flip={flip:?} t_f={:?} dd={:?} ok={}",
            first.host, first.other, r.t_f, r.min_delta_d, r.success
        );
    }
}

fn baseline() {
    let mut spec = two_vehicle_spec(60.0, 60.0, 40.0 / 3.6, 40.0 / 3.6, 42);
    spec.sim.record_trajectory = true;
    let r = run_scenario(&spec);
    println!(
        "success={} aeb={} timeout={} t_f={:?} delta_d={:?} min_speed={:?}",
        r.success, r.aeb, r.timed_out, r.t_f, r.min_delta_d, r.min_speed
    );
    for c in &r.commands {
        println!(
            "t={:5.2} agent={} cmd={:?} a_target={:+.2}",
            c.t, c.agent, c.command, c.a_target
        );
    }
    for d in &r.decisions {
        println!(
            "t={:5.2} {}v{} case={:?} esc={} chosen=({:?},{:?}) eq={}",
            d.t,
            d.host,
            d.opponent,
            d.case_id,
            d.escalations,
            d.chosen.host,
            d.chosen.other,
            d.equilibria.len()
        );
    }
    // B's switch back to acceleration.
    let b_switch = r
        .commands
        .iter()
        .filter(|c| c.agent == 1 && c.t > 0.6)
        .find(|c| c.command == Command::Accelerate)
        .map(|c| c.t);
    println!("B re-acceleration at t={b_switch:?}");
    let first = r.decisions.first().unwrap();
    println!(
        "first subgame chosen = ({:?}, {:?})",
        first.chosen.host, first.chosen.other
    );
    let _ = Strategy::Accelerate;
}

fn table1() {
    for case in gen_limit_grid(1) {
        let r = run_scenario(&case.spec);
        println!(
            "{:>14} success={} aeb={} t_f={:?} delta_d={:?}",
            case.label, r.success, r.aeb, r.t_f, r.min_delta_d
        );
    }
}

fn fourav() {
    let mut spec = four_av_worked_case(7);
    spec.sim.record_trajectory = true;
    let r = run_scenario(&spec);
    println!(
        "success={} aeb={} timeout={} t_ic={:?} clear={:?} min_dd={:?}",
        r.success, r.aeb, r.timed_out, r.t_ic, r.clear_times, r.min_delta_d
    );
    for c in r.commands.iter().filter(|c| c.t < 6.01) {
        println!(
            "t={:4.1} agent={} cmd={:?} a={:+.2}",
            c.t, c.agent, c.command, c.a_target
        );
    }
    for d in r.decisions.iter().filter(|d| d.t < 6.01) {
        println!(
            "t={:4.1} pair {}v{} rect={} case={:?} chosen=({:?},{:?})",
            d.t, d.host, d.opponent, d.rect_index, d.case_id, d.chosen.host, d.chosen.other
        );
    }
    if let Some(trajs) = &r.trajectories {
        for (i, traj) in trajs.iter().enumerate() {
            let line: Vec<String> = traj
                .iter()
                .step_by(100)
                .map(|s| format!("{:.0}:{:.1}/{:.1}", s.t, s.speed, s.pos))
                .collect();
            println!("agent{i}: {}", line.join(" "));
        }
    }
}

fn fourav_stats() {
    for mu in [0.0, 4.0, 8.0] {
        let specs: Vec<_> = gen_four_av_cases(mu, 200, 7).into_iter().map(|c| c.spec).collect();
        let results = run_batch(&specs, None);
        let stats = aggregate_stats(&results, mu);
        println!("{stats:?}");
    }
}

fn uniform() {
    let specs: Vec<_> = gen_uniform_cases(500, 7).into_iter().map(|c| c.spec).collect();
    let results = run_batch(&specs, None);
    println!("{:?}", uniform_stats(&results));
}

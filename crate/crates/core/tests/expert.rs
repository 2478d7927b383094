use quard_core::expert::{generate_episode, sample_scene, Expert, SceneRules};
use quard_core::sim::{EntityKind, Status, World};
use quard_core::task::{Skill, SpeedLevel, TaskSpec};
use quard_core::QuardConfig;

fn specs(skill: Skill) -> Vec<TaskSpec> {
    TaskSpec::seen_space(skill)
}

#[test]
fn go_avoid_scenes_respect_placement_rules() {
    let rules = SceneRules::default();
    let space = specs(Skill::GoAvoid);
    let mut violations = 0;
    for seed in 0..10_000u64 {
        let s = sample_scene(&space[seed as usize % space.len()], seed, &rules);
        let t = s.target().unwrap().pose;
        let obstacles: Vec<_> = s.entities.iter().filter(|e| e.kind == EntityKind::Obstacle).collect();
        let ok = (2.7..=3.3).contains(&t.x)
            && (0.9..=1.1).contains(&t.y)
            && obstacles.len() == 1
            && obstacles[0].pose.x == t.x - 1.5
            && obstacles[0].pose.y == t.y;
        violations += usize::from(!ok);
    }
    assert_eq!(violations, 0);
}

#[test]
fn go_to_closed_loop_tracks_the_plan() {
    let cfg = QuardConfig::default();
    let space = specs(Skill::GoTo);
    let (mut successes, mut sq, mut n) = (0, 0.0, 0usize);
    for seed in 0..100u64 {
        let task = space[seed as usize % space.len()];
        let scene = sample_scene(&task, seed, &cfg.scene);
        let mut world = World::new(&scene, task, cfg.sim.clone()).unwrap();
        let mut expert = Expert::new(&world, &cfg).unwrap();
        loop {
            let a = expert.act(&world).unwrap();
            let out = world.step(&a.applied).unwrap();
            let r = world.state().robot;
            let e = expert.tracker().unwrap().cross_track(r.x, r.y);
            sq += e * e;
            n += 1;
            if out.status.is_terminal() {
                successes += usize::from(out.status == Status::Success);
                break;
            }
        }
    }
    let rms = (sq / n as f64).sqrt();
    assert!(successes >= 95, "success {successes}/100");
    assert!(rms <= 0.2, "cross-track rms {rms:.3}");
}

#[test]
fn terminate_is_set_once_on_the_last_step() {
    let cfg = QuardConfig::default();
    for &skill in Skill::ALL {
        let space = specs(skill);
        for seed in 0..40u64 {
            let g = generate_episode(&space[seed as usize % space.len()], seed, &cfg).unwrap();
            assert!(g.episode.outcome.is_success(), "{skill} seed {seed}");
            let t: Vec<bool> = g.episode.steps.iter().map(|s| s.command.t).collect();
            assert_eq!(t.iter().filter(|&&x| x).count(), 1, "{skill} seed {seed}");
            assert!(*t.last().unwrap());
        }
    }
}

#[test]
fn commanded_speed_stays_in_band() {
    let cfg = QuardConfig::default();
    for &skill in Skill::ALL {
        for &speed in SpeedLevel::ALL {
            let band = cfg.expert.bands.band(speed);
            let space: Vec<TaskSpec> = specs(skill).into_iter().filter(|t| t.speed == speed).collect();
            let (mut inside, mut total) = (0, 0);
            for seed in 0..60u64 {
                let g = generate_episode(&space[seed as usize % space.len()], seed, &cfg).unwrap();
                let steps = &g.episode.steps;
                if steps.len() <= 4 {
                    continue;
                }
                for s in &steps[2..steps.len() - 2] {
                    let v = s.command.v_x.abs();
                    total += 1;
                    inside += usize::from(v >= band[0] - 1e-9 && v <= band[1] + 1e-9);
                }
            }
            // distinguish turns in place and has no translation to measure
            if skill == Skill::Distinguish {
                continue;
            }
            assert!(total > 0, "{skill} {speed:?}");
            let share = inside as f64 / total as f64;
            assert!(share >= 0.95, "{skill} {speed:?}: {share:.3}");
        }
    }
}

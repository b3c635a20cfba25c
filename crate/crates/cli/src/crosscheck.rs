//! Seeded comparison of every checker against its brute-force oracles.

use nipol_core::intransitive::{
    check_i_security, check_i_security_uniform, i_security_bounded_oracle, is_intransitively_uniform, Budget,
    SubsetGuard,
};
use nipol_core::oracle::{
    generate_random_system, ipurge_equality_oracle, purge_equality_oracle, t_definition_oracle,
    GeneratorConfig,
};
use nipol_core::transitive::{check_t_from_initial, check_t_security, is_uniform_t, t_security_pair_oracle};
use nipol_core::{AnalysisError, Verdict};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub t_insecure: bool,
    pub i_insecure: bool,
    pub i_uniform: bool,
    /// Oracles skipped for lack of budget or because of the subset guard.
    pub skipped: Vec<String>,
    pub disagreements: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub shape: GeneratorConfig,
    pub bound: usize,
    pub budget: Budget,
}

fn witness_len(v: &Verdict) -> Option<usize> {
    v.flow_witness().map(|w| w.alpha.len())
}

fn compare(
    out: &mut SeedOutcome,
    what: &str,
    bound: usize,
    checker: &Verdict,
    definition: &Verdict,
    equality: &Verdict,
) {
    let len = witness_len(checker);
    let in_def = len.is_some_and(|l| l <= bound);
    let in_eq = len.is_some_and(|l| l < bound);
    if definition.holds == in_def {
        out.disagreements.push(format!(
            "{what}: definition oracle says holds={}",
            definition.holds
        ));
    } else if in_def && definition.witness != checker.witness {
        out.disagreements.push(format!(
            "{what}: definition oracle found a different minimal witness"
        ));
    }
    if equality.holds == in_eq {
        out.disagreements
            .push(format!("{what}: equality oracle says holds={}", equality.holds));
    }
}

fn oracle<T>(out: &mut SeedOutcome, name: &str, r: Result<T, AnalysisError>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            out.skipped.push(format!("{name}: {e}"));
            None
        }
    }
}

pub fn check_seed(settings: &Settings, seed: u64) -> SeedOutcome {
    let sys = generate_random_system(&settings.shape.with_seed(seed));
    let (b, budget) = (settings.bound, settings.budget);
    let mut out = SeedOutcome {
        seed,
        ..SeedOutcome::default()
    };

    let t = check_t_security(&sys);
    out.t_insecure = !t.holds;
    if t_security_pair_oracle(&sys).witness != t.witness {
        out.disagreements.push("t: pair oracle witness differs".into());
    }
    let def = oracle(&mut out, "t definition", t_definition_oracle(&sys, b, budget));
    let eq = oracle(&mut out, "purge equality", purge_equality_oracle(&sys, b, budget));
    if let (Some(def), Some(eq)) = (def, eq) {
        compare(&mut out, "t", b, &t, &def, &eq);
    }
    if is_uniform_t(&sys).holds {
        match check_t_from_initial(&sys) {
            Ok(v) if v.holds == t.holds => {}
            Ok(_) => out
                .disagreements
                .push("t: initial-state check differs on a uniform policy".into()),
            Err(e) => out
                .disagreements
                .push(format!("t: initial-state check failed: {e}")),
        }
    }

    let Some(i) = oracle(
        &mut out,
        "i checker",
        check_i_security(&sys, SubsetGuard::default()),
    ) else {
        return out;
    };
    out.i_insecure = !i.holds;
    let def = oracle(&mut out, "i bounded", i_security_bounded_oracle(&sys, b, budget));
    let eq = oracle(
        &mut out,
        "ipurge equality",
        ipurge_equality_oracle(&sys, b, budget),
    );
    if let (Some(def), Some(eq)) = (def, eq) {
        compare(&mut out, "i", b, &i, &def, &eq);
    }
    out.i_uniform = is_intransitively_uniform(&sys).holds;
    if out.i_uniform {
        match check_i_security_uniform(&sys) {
            Ok(v) if v.holds == i.holds => {}
            Ok(_) => out.disagreements.push("i: uniform checker differs".into()),
            Err(e) => out.disagreements.push(format!("i: uniform checker failed: {e}")),
        }
    }
    out
}

/// Runs `seeds` on `jobs` threads; results come back in seed order.
pub fn run(settings: &Settings, seeds: std::ops::Range<u64>, jobs: usize) -> Vec<SeedOutcome> {
    let all: Vec<u64> = seeds.collect();
    let jobs = jobs.clamp(1, all.len().max(1));
    let chunk = all.len().div_ceil(jobs).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = all
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || part.iter().map(|&s| check_seed(settings, s)).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("crosscheck worker panicked"))
            .collect()
    })
}

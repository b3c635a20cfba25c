//! Small reference systems shipped with the crate.

use crate::io::parse;
use crate::model::System;

pub const FIG1: &str = include_str!("../fixtures/fig1.nipol");
pub const FIG2: &str = include_str!("../fixtures/fig2.nipol");
pub const FIG3: &str = include_str!("../fixtures/fig3.nipol");
pub const FIG4: &str = include_str!("../fixtures/fig4.nipol");
pub const GLOBAL_DG: &str = include_str!("../fixtures/global_dg.nipol");
pub const UNIFORM_WITH_USELESS: &str = include_str!("../fixtures/uniform_with_useless.nipol");
pub const NONUNIFORM_NO_USELESS: &str = include_str!("../fixtures/nonuniform_no_useless.nipol");

pub const GRAPH_SINGLE: &str = include_str!("../fixtures/single.graph");
pub const GRAPH_K3: &str = include_str!("../fixtures/k3.graph");
pub const GRAPH_K4: &str = include_str!("../fixtures/k4.graph");

fn load(text: &str) -> System {
    parse(text).expect("bundled fixture is valid").system
}

/// Administrator switching policies; insecure in both settings.
pub fn fig1() -> System {
    load(FIG1)
}

/// Three-state t-secure system.
pub fn fig2() -> System {
    load(FIG2)
}

/// Downgrader example with the edge `H ⤳ L` in state `h1`.
pub fn fig3() -> System {
    load(FIG3)
}

/// Non-uniform policy where initial-state purge checking is unsound.
pub fn fig4() -> System {
    load(FIG4)
}

/// Global policy `H ⤳ DG ⤳ L`.
pub fn global_dg() -> System {
    load(GLOBAL_DG)
}

/// Intransitively uniform policy that still has useless edges.
pub fn uniform_with_useless() -> System {
    load(UNIFORM_WITH_USELESS)
}

/// Policy without intransitively useless edges that is not uniform.
pub fn nonuniform_no_useless() -> System {
    load(NONUNIFORM_NO_USELESS)
}

pub fn all() -> Vec<System> {
    vec![
        fig1(),
        fig2(),
        fig3(),
        fig4(),
        global_dg(),
        uniform_with_useless(),
        nonuniform_no_useless(),
    ]
}

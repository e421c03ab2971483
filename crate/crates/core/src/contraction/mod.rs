//! Self-maps and the contraction checks run against them.

mod checks;
mod map;

pub use checks::{
    closed_ball_hypotheses, contractive_sequence_check, if_contractive_check,
    if_contractive_check_in, t_uniform_continuity_probe, t_uniform_continuity_probe_in,
    ts_if_contractive_check, ts_if_contractive_check_in, ContractivityReport, EpsilonWitness,
    Notion, SideCheck, Verdict, CONTINUITY_R_HALVINGS, K_MARGIN, TS_IF_TAIL_DOUBLINGS,
};
pub use map::{PointFn, SelfMap};

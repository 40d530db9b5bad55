//! Scenarios shipped with the binary.

/// `(name, TOML text)` for every preset.
pub const PRESETS: &[(&str, &str)] = &[
    ("kuramoto_sync", include_str!("../presets/kuramoto_sync.toml")),
    ("ring_consensus", include_str!("../presets/ring_consensus.toml")),
    ("circle_limit_cycle", include_str!("../presets/circle_limit_cycle.toml")),
    ("son_sync", include_str!("../presets/son_sync.toml")),
    ("son_balance_antipodal", include_str!("../presets/son_balance_antipodal.toml")),
    ("grass_balance", include_str!("../presets/grass_balance.toml")),
    ("estimator_directed_switching", include_str!("../presets/estimator_directed_switching.toml")),
    ("estimator_balancing", include_str!("../presets/estimator_balancing.toml")),
    ("local_frame_equivalence", include_str!("../presets/local_frame_equivalence.toml")),
    ("vicsek_discrete", include_str!("../presets/vicsek_discrete.toml")),
    ("random_digraph_sweep", include_str!("../presets/random_digraph_sweep.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

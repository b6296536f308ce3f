//! Named configurations.

/// Two buyer groups flanking one seller group, segregating over time.
pub const FIGURE1: &str = "\
model = hu
x_min = -1
x_max = 1
n_cells = 1000
sigma = 0.1
epsilon = 0.05
scheme = paper_central
T = 30
dt_out = 0.5
snapshot_times = 0, 0.5, 1, 5, 10, 30
init.f.kind = bump_sum
init.f.centers = -0.35, 0.35
init.f.widths = 0.25
init.f.amplitudes = 0.15
init.g.kind = gaussian_bump
init.g.center = 0
init.g.width = 0.3
init.g.amplitude = 0.2
";

/// Frozen `h = 1` with a smoothed step in `u`; sweep epsilon towards zero.
pub const BURGERS_LIMIT: &str = "\
model = burgers
x_min = -1
x_max = 1
n_cells = 400
diffusion = 1
epsilon = 0.0125
T = 1
dt_out = 0.01
snapshot_times = 0, 1
init.f.kind = tanh_profile
init.f.center = 0
init.f.width = 0.25
init.f.amplitude = -0.45
init.f.offset = 0.5
init.g.kind = tanh_profile
init.g.center = 0
init.g.width = 0.25
init.g.amplitude = 0.45
init.g.offset = 0.5
";

pub const NAMES: &[&str] = &["figure1", "burgers-limit"];

pub fn text(name: &str) -> Option<&'static str> {
    match name {
        "figure1" => Some(FIGURE1),
        "burgers-limit" => Some(BURGERS_LIMIT),
        _ => None,
    }
}

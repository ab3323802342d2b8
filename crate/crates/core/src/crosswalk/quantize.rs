/// Rounds half away from zero to `decimals` places.
pub fn round_to(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round() / scale
}

pub fn is_rounded(x: f64, decimals: u32) -> bool {
    round_to(x, decimals) == x
}

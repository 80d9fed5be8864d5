//! Parameter grids given as `start:step:end` or as a comma list.

const MAX_POINTS: usize = 10_000;

fn round9(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

/// Expands a grid spec. Range points are rounded to 1e-9 so that
/// `0.70:0.05:1.00` ends exactly at `1`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err("empty grid".into());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, step, end] = parts[..] else {
            return Err(format!("range `{spec}` must look like start:step:end"));
        };
        let (start, step, end) = (number(start)?, number(step)?, number(end)?);
        if step <= 0.0 {
            return Err(format!("range step must be positive, got {step}"));
        }
        if end < start {
            return Err(format!("range end {end} is below its start {start}"));
        }
        let steps = ((end - start) / step + 1e-9).floor();
        if steps >= MAX_POINTS as f64 {
            return Err(format!("range `{spec}` has more than {MAX_POINTS} points"));
        }
        Ok((0..=steps as usize)
            .map(|i| round9(start + i as f64 * step))
            .collect())
    } else {
        let values = spec.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        if values.len() > MAX_POINTS {
            return Err(format!("grid has more than {MAX_POINTS} points"));
        }
        Ok(values)
    }
}

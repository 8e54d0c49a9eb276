use super::InequalityError;

pub(crate) fn check_inputs(values: &[f64], weights: &[f64]) -> Result<(), InequalityError> {
    if values.len() != weights.len() {
        return Err(InequalityError::LengthMismatch(values.len(), weights.len()));
    }
    if values.is_empty() {
        return Err(InequalityError::Empty);
    }
    for (index, (&y, &w)) in values.iter().zip(weights).enumerate() {
        if !y.is_finite() || !w.is_finite() {
            return Err(InequalityError::NonFinite { index });
        }
        if y < 0.0 {
            return Err(InequalityError::NegativeValue { index, value: y });
        }
        if w <= 0.0 {
            return Err(InequalityError::NonPositiveWeight { index, weight: w });
        }
    }
    Ok(())
}

/// Weighted Gini coefficient: half the relative mean absolute difference
/// with frequency weights.
///
/// Evaluated in O(n log n) over the sorted values as
/// `G = Σᵢ wᵢ Dᵢ / (W · Σ wᵢyᵢ)` with `Dᵢ = Σ_{j<i} wⱼ (yᵢ − yⱼ)`, updated as
/// `Dᵢ = Dᵢ₋₁ + Cᵢ (yᵢ − yᵢ₋₁)` where `Cᵢ` is the weight below i. Every
/// term is non-negative, so equal values give exactly zero and small
/// coefficients keep their relative precision.
pub fn weighted_gini(values: &[f64], weights: &[f64]) -> Result<f64, InequalityError> {
    check_inputs(values, weights)?;
    gini_unchecked(values, weights)
}

pub(crate) fn gini_unchecked(values: &[f64], weights: &[f64]) -> Result<f64, InequalityError> {
    let total_weight: f64 = weights.iter().sum();
    let weighted_sum: f64 = values.iter().zip(weights).map(|(y, w)| y * w).sum();
    if weighted_sum <= 0.0 {
        return Err(InequalityError::ZeroMean);
    }

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut below = 0.0;
    let mut gap = 0.0;
    let mut previous = values[order[0]];
    let mut acc = 0.0;
    for i in order {
        gap += below * (values[i] - previous);
        acc += weights[i] * gap;
        below += weights[i];
        previous = values[i];
    }
    Ok((acc / (total_weight * weighted_sum)).min(1.0))
}

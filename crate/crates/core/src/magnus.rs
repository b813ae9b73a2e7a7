//! Constants of the two-stage fourth-order Magnus method for `F' = F B`:
//! with `X_i = h B(t + c_i h)`, one step is `F ↦ F exp(Ω)` where
//! `Ω = ½(X_1 + X_2) + (√3/12)[X_1, X_2]`.

/// Gauss nodes `c_i = ½ ∓ √3/6`.
pub(crate) const NODES: [f64; 2] = [
    0.5 - 0.288_675_134_594_812_9,
    0.5 + 0.288_675_134_594_812_9,
];

/// `√3 / 12`.
pub(crate) const COMMUTATOR: f64 = 0.144_337_567_297_406_43;

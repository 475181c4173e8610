//! Haar nets of bounded windows in SU(2) and SL2(R), the averaging,
//! translation and Littlewood-Paley operators on net functions, and probes
//! for almost orthogonality, Cotlar-Stein, flattening, dyadic level sets and
//! mixing.

mod net;
mod ops;
mod probes;

pub use net::{
    chart_exp, embed, haar_ball_volume, haar_density, sample_region, sl2r_exp, sl2r_log, su2_ball_volume,
    su2_exp, su2_log, Net, NetReport, Region, DEFAULT_NET_CAP, FULL_SU2_RADIUS,
};
pub use ops::{
    l2_norm, op_measure, op_p_delta, op_translate, DeltaView, LittlewoodPaley, NetOperator,
};
pub use probes::{
    ao_table, almost_orthogonality_table, convolve_on_net, cotlar_stein_probe, dyadic_decompose,
    flat_ratio, flattening_curve, level_conditions, littlewood_paley_check, mixing_probe, pair_norms, powers_check, random_unit,
    smoothed_density, AoTable, CotlarData, CotlarReport, DyadicDecomposition, DyadicReport,
    FlatteningCurve, LevelConditions, LpReport, MixingSample, PairNorms, PowersReport, MIXING_EXPONENT,
};

//! Reference data compiled into the library: the observed seven-blog panel,
//! reference fitted parameters and error metrics, and the reference
//! two-period forecasts of the reduced EPO model.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimate::fit_latent_states;
use crate::matrix::Matrix;
use crate::panel::{Family, ModelSpec, ParamParts, ParamSet, SentimentPanel};

/// Observed collective sentiments, seven blogs over twelve 15-day periods.
pub const PANEL_CSV: &str = "\
blog_id,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10,p11,p12
blog1,0.542237,0.69269,0.719408,0.656396,0.662846,0.72706,0.582414,0.577169,0.658991,0.808328,0.775289,0.713721
blog2,0.690464,0.685991,0.626356,0.593513,0.809609,0.665289,0.529654,0.678874,0.659458,0.682581,0.709356,0.636683
blog3,0.640777,0.601049,0.617184,0.593332,0.643933,0.648383,0.601566,0.568535,0.610053,0.552651,0.600009,0.499918
blog4,0.687817,0.623997,0.529495,0.621614,0.649233,0.708136,0.598221,0.604527,0.607142,0.600858,0.592896,0.627276
blog5,0.473992,0.497273,0.513026,0.506612,0.546008,0.594167,0.523988,0.545223,0.571942,0.573838,0.484829,0.561077
blog6,0.740787,0.669839,0.666616,0.742431,0.571651,0.73716,0.655859,0.636605,0.669664,0.710904,0.679262,0.784448
blog7,0.551033,0.557094,0.537976,0.49017,0.632734,0.766128,0.574511,0.653399,0.694449,0.679584,0.680478,0.708864
";

/// Training periods used for the reference fits.
pub const T_EST: usize = 10;

/// Periods held out for out-of-sample evaluation.
pub const TEST_PERIODS: [usize; 2] = [11, 12];

/// Slack for validating reference parameters, which are rounded to four decimals.
pub const REFERENCE_TOLERANCE: f64 = 1e-4;

/// Reduced EPO forecasts for periods 11 and 12, one row per blog.
pub const REPO_FORECASTS: [[f64; 2]; 7] = [
    [0.692155, 0.689703],
    [0.69206, 0.685445],
    [0.577721, 0.579021],
    [0.574334, 0.5952],
    [0.584956, 0.594069],
    [0.684408, 0.688682],
    [0.677213, 0.682164],
];

/// One row of the error table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceMetrics {
    pub sum_of_residuals: f64,
    pub mae: f64,
    pub mape_percent: f64,
    pub rmse_in_sample: f64,
    pub rmse_t11: f64,
    pub rmse_t12: f64,
    pub rmse_out: f64,
}

pub fn panel() -> SentimentPanel {
    SentimentPanel::read_csv(PANEL_CSV.as_bytes()).expect("bundled panel is valid")
}

/// The ten reference model configurations, in table order.
pub fn reference_specs() -> Vec<ModelSpec> {
    [
        (Family::Fdg, 0),
        (Family::Fj, 0),
        (Family::Epo, 0),
        (Family::Repo, 0),
        (Family::Fdgm, 1),
        (Family::Fdgm, 2),
        (Family::Epo, 1),
        (Family::Repo, 1),
        (Family::Epo, 2),
        (Family::Repo, 2),
    ]
    .into_iter()
    .map(|(f, lag)| ModelSpec::new(f, lag).expect("valid reference spec"))
    .collect()
}

pub fn reference_metrics() -> BTreeMap<ModelSpec, ReferenceMetrics> {
    let rows: [(Family, usize, [f64; 7]); 10] = [
        (Family::Fdg, 0, [0.2000, 0.1308, 7.7957, 0.1461, 0.1463, 0.1927, 0.1711]),
        (Family::Fj, 0, [0.1647, 0.1257, 7.5226, 0.1401, 0.1330, 0.1704, 0.1529]),
        (Family::Epo, 0, [0.0773, 0.1129, 6.7539, 0.1319, 0.1422, 0.1563, 0.1494]),
        (
            Family::Repo,
            0,
            [0.0879, 0.1161, 6.9463, 0.1347, 0.1346, 0.1457, 0.1402],
        ),
        (
            Family::Fdgm,
            1,
            [0.1754, 0.1219, 7.2959, 0.1423, 0.1496, 0.1512, 0.1504],
        ),
        (
            Family::Fdgm,
            2,
            [0.1412, 0.0987, 5.8621, 0.1242, 0.1238, 0.1641, 0.1454],
        ),
        (Family::Epo, 1, [0.0681, 0.1222, 7.3173, 0.1411, 0.1335, 0.1559, 0.1451]),
        (
            Family::Repo,
            1,
            [0.0783, 0.1277, 7.6704, 0.1434, 0.1347, 0.1476, 0.1413],
        ),
        (Family::Epo, 2, [0.0530, 0.0883, 5.2564, 0.1154, 0.1584, 0.1340, 0.1467]),
        (
            Family::Repo,
            2,
            [0.0639, 0.0854, 5.0497, 0.1114, 0.1208, 0.1641, 0.1441],
        ),
    ];
    rows.into_iter()
        .map(|(f, lag, v)| {
            let spec = ModelSpec::new(f, lag).expect("valid reference spec");
            let m = ReferenceMetrics {
                sum_of_residuals: v[0],
                mae: v[1],
                mape_percent: v[2],
                rmse_in_sample: v[3],
                rmse_t11: v[4],
                rmse_t12: v[5],
                rmse_out: v[6],
            };
            (spec, m)
        })
        .collect()
}

/// Reference fitted parameters for `spec`.
///
/// Latent states are not part of the reference data; for two-layer families
/// they are set to the trajectory that minimises the training objective
/// given the reference parameters.
pub fn reference_params(spec: ModelSpec) -> Result<ParamSet> {
    let raw = raw(spec)?;
    let rows = |m: &[[f64; 7]; 7]| Matrix::from_rows(&m.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("7x7");
    let vec = |v: Option<[f64; 7]>| v.map(|v| v.to_vec());
    let panel = panel();
    let parts = if spec.family().is_two_layer() {
        ParamParts {
            a: Some(rows(raw.a.as_ref().expect("A"))),
            d: vec(raw.d),
            s: vec(raw.s),
            phi: vec(raw.phi),
            z: vec(raw.z),
            x: Some(panel.values().leading_columns(T_EST)),
            ..Default::default()
        }
    } else {
        ParamParts {
            w: Some(rows(&raw.w)),
            s: vec(raw.s),
            z: vec(raw.z),
            ..Default::default()
        }
    };
    let params = ParamSet::with_tolerance(spec.family(), parts, REFERENCE_TOLERANCE)?;
    if spec.family().is_two_layer() {
        fit_latent_states(spec, &params, &panel, T_EST)
    } else {
        Ok(params)
    }
}

/// Reference influence matrix `W` for `spec`, as printed (for two-layer
/// families it is redundant with `A` and `D`).
pub fn reference_influence(spec: ModelSpec) -> Result<Matrix> {
    let raw = raw(spec)?;
    Ok(Matrix::from_rows(&raw.w.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("7x7"))
}

/// Every reference parameter set, in table order.
pub fn reference_params_all() -> Result<Vec<(ModelSpec, ParamSet)>> {
    reference_specs()
        .into_iter()
        .map(|spec| Ok((spec, reference_params(spec)?)))
        .collect()
}

fn raw(spec: ModelSpec) -> Result<&'static RawParams> {
    RAW.iter()
        .find(|r| r.family == spec.family() && r.lag == spec.lag())
        .ok_or_else(|| Error::InvalidSpec(format!("no reference parameters for {spec}")))
}

struct RawParams {
    family: Family,
    lag: usize,
    w: [[f64; 7]; 7],
    a: Option<[[f64; 7]; 7]>,
    d: Option<[f64; 7]>,
    s: Option<[f64; 7]>,
    phi: Option<[f64; 7]>,
    z: Option<[f64; 7]>,
}

const RAW: [RawParams; 10] = [
    RawParams {
        family: Family::Fdg,
        lag: 0,
        w: [
            [0.0244, 0.6763, 0.0, 0.0, 0.0, 0.2993, 0.0],
            [0.0, 0.1924, 0.0989, 0.0, 0.0589, 0.6498, 0.0],
            [0.0, 0.2177, 0.3311, 0.0, 0.3025, 0.1487, 0.0],
            [0.0, 0.1601, 0.7622, 0.0, 0.0777, 0.0, 0.0],
            [0.0, 0.1097, 0.0, 0.0, 0.8903, 0.0, 0.0],
            [0.2813, 0.5685, 0.0, 0.0, 0.0, 0.1502, 0.0],
            [0.0, 0.4987, 0.0, 0.0847, 0.3206, 0.0, 0.0960],
        ],
        a: None,
        d: None,
        s: None,
        phi: None,
        z: None,
    },
    RawParams {
        family: Family::Fj,
        lag: 0,
        w: [
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.1268, 0.1422, 0.1493, 0.1554, 0.1422, 0.1756, 0.1085],
            [0.1051, 0.6610, 0.0, 0.0029, 0.0, 0.2310, 0.0],
            [0.0, 0.2920, 0.6933, 0.0, 0.0147, 0.0, 0.0],
            [0.0, 0.2000, 0.0, 0.0, 0.8000, 0.0, 0.0],
            [0.1731, 0.4940, 0.2603, 0.0, 0.0, 0.0, 0.0726],
            [0.0, 0.3311, 0.0, 0.0, 0.6689, 0.0, 0.0],
        ],
        a: None,
        d: None,
        s: Some([0.4861, 0.0, 0.3347, 0.5676, 0.5509, 0.6756, 0.8905]),
        phi: None,
        z: Some([0.6915, 0.6590, 0.5748, 0.6026, 0.5231, 0.7394, 1.0]),
    },
    RawParams {
        family: Family::Fdgm,
        lag: 1,
        w: [
            [0.0, 0.6813, 0.0, 0.0, 0.0, 0.3187, 0.0],
            [0.0, 0.1823, 0.1652, 0.0, 0.0, 0.6525, 0.0],
            [0.0, 0.5703, 0.0, 0.0, 0.4297, 0.0, 0.0],
            [0.0, 0.1496, 0.8176, 0.0, 0.0328, 0.0, 0.0],
            [0.0, 0.7676, 0.0, 0.0, 0.2324, 0.0, 0.0],
            [0.4277, 0.3967, 0.0, 0.0, 0.0, 0.0, 0.1756],
            [0.0, 0.9052, 0.0, 0.0246, 0.0702, 0.0, 0.0],
        ],
        a: None,
        d: None,
        s: Some([1.0, 1.0, 0.4229, 1.0, 0.2877, 0.6648, 0.6756]),
        phi: None,
        z: None,
    },
    RawParams {
        family: Family::Fdgm,
        lag: 2,
        w: [
            [0.0, 0.6753, 0.0, 0.0, 0.0, 0.3247, 0.0],
            [0.0, 0.3628, 0.0, 0.0, 0.0, 0.6372, 0.0],
            [0.0, 0.2109, 0.1405, 0.3481, 0.3004, 0.0, 0.0],
            [0.0, 0.3239, 0.6637, 0.0, 0.0, 0.0124, 0.0],
            [0.0, 0.4657, 0.4326, 0.0, 0.1017, 0.0, 0.0],
            [0.3881, 0.5609, 0.0510, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.7242, 0.0, 0.2758, 0.0, 0.0, 0.0],
        ],
        a: None,
        d: None,
        s: Some([1.0, 0.5977, 0.5596, 0.9146, 0.3260, 0.7275, 0.7103]),
        phi: None,
        z: None,
    },
    RawParams {
        family: Family::Epo,
        lag: 0,
        w: [
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.5705, 0.0789, 0.0, 0.0, 0.3506, 0.0],
            [0.0, 0.2846, 0.7049, 0.0106, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [0.1731, 0.494, 0.2603, 0.0, 0.0, 0.0, 0.0726],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ],
        a: Some([
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.1383, 0.0, 0.174, 0.1834, 0.1646, 0.2294, 0.1102],
            [0.0, 0.6193, 0.0, 0.0, 0.0, 0.3807, 0.0],
            [0.0, 0.2876, 0.7124, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.1731, 0.494, 0.2603, 0.0, 0.0, 0.0, 0.0726],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ]),
        d: Some([0.0, 1.0, 0.0789, 0.0106, 1.0, 0.0, 1.0]),
        s: Some([0.4861, 0.0288, 0.4628, 0.5802, 0.7539, 0.6756, 0.8456]),
        phi: Some([1.0, 1.0, 1.0, 1.0, 0.8158, 1.0, 0.6261]),
        z: Some([0.6915, 0.6579, 0.5591, 0.6016, 0.5614, 0.7394, 0.8018]),
    },
    RawParams {
        family: Family::Repo,
        lag: 0,
        w: [
            [0.0160, 0.6758, 0.0, 0.0, 0.0, 0.3082, 0.0],
            [0.0, 0.4091, 0.0, 0.0, 0.0211, 0.5698, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.1506, 0.7827, 0.0206, 0.0461, 0.0, 0.0],
            [0.0, 0.0729, 0.0, 0.0, 0.9271, 0.0, 0.0],
            [0.0, 0.5585, 0.0, 0.0, 0.0, 0.4415, 0.0],
            [0.0, 0.3336, 0.0, 0.0, 0.0, 0.0, 0.6664],
        ],
        a: Some([
            [0.0, 0.6868, 0.0, 0.0, 0.0, 0.3132, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0356, 0.9644, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.1537, 0.7992, 0.0, 0.0471, 0.0, 0.0],
            // The third entry is blank in the source table.
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ]),
        d: Some([0.0160, 0.4091, 1.0, 0.0206, 0.9271, 0.4415, 0.6664]),
        s: None,
        phi: Some([1.0, 1.0, 0.8629, 1.0, 0.8510, 1.0, 1.0]),
        z: None,
    },
    RawParams {
        family: Family::Epo,
        lag: 1,
        w: [
            [0.1271, 0.8729, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.6043, 0.0114, 0.0, 0.0, 0.3843, 0.0],
            [0.0, 0.6015, 0.03, 0.3686, 0.0, 0.0, 0.0],
            [0.0, 0.6948, 0.0, 0.0, 0.3052, 0.0, 0.0],
            [0.13, 0.51, 0.3027, 0.0, 0.0, 0.0217, 0.0356],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ],
        a: Some([
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.1759, 0.0, 0.1746, 0.1616, 0.1743, 0.1797, 0.1339],
            [0.0, 0.6113, 0.0, 0.0, 0.0, 0.3887, 0.0],
            [0.0, 0.9525, 0.0475, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.1329, 0.5213, 0.3094, 0.0, 0.0, 0.0, 0.0363],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        ]),
        d: Some([0.1271, 1.0, 0.0114, 0.3686, 0.3052, 0.0217, 1.0]),
        s: Some([0.5294, 0.0408, 0.4494, 0.4326, 0.2815, 0.6997, 0.6546]),
        phi: Some([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.4507]),
        z: Some([0.687, 0.6593, 0.5583, 0.6178, 0.5255, 0.7534, 0.7391]),
    },
    RawParams {
        family: Family::Epo,
        lag: 2,
        w: [
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [0.1640, 0.8323, 0.0, 0.0037, 0.0, 0.0, 0.0],
            [0.0, 0.6936, 0.0, 0.0, 0.3064, 0.0, 0.0],
            [0.0, 0.5321, 0.0, 0.0, 0.0, 0.2784, 0.1895],
            [0.0, 0.6193, 0.0, 0.0, 0.0, 0.0, 0.3807],
        ],
        a: Some([
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.1767, 0.0, 0.1766, 0.1659, 0.1665, 0.1865, 0.1278],
            [0.8348, 0.0, 0.0, 0.0, 0.0, 0.1652, 0.0],
            [0.1646, 0.8354, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.7374, 0.0, 0.0, 0.0, 0.0, 0.2626],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ]),
        d: Some([0.0, 1.0, 1.0, 0.0037, 0.3064, 0.2784, 0.380772]),
        s: Some([0.4613, 0.0791, 0.8052, 0.6506, 0.2726, 0.8619, 0.5673]),
        phi: Some([1.0, 1.0, 0.4858, 0.7465, 0.9771, 1.0, 1.0]),
        z: Some([0.6811, 0.6682, 0.4374, 0.5521, 0.5319, 0.7374, 0.6821]),
    },
    RawParams {
        family: Family::Repo,
        lag: 1,
        w: [
            [0.0943, 0.6390, 0.0, 0.0, 0.0, 0.2667, 0.0],
            [0.0, 0.3622, 0.0, 0.0, 0.0, 0.6378, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.2634, 0.5478, 0.1508, 0.0, 0.0380, 0.0],
            [0.0, 0.0893, 0.0, 0.0, 0.9107, 0.0, 0.0],
            [0.0, 0.5562, 0.0, 0.0, 0.0, 0.4438, 0.0],
            [0.0, 0.5040, 0.0, 0.3012, 0.0, 0.0, 0.1948],
        ],
        a: Some([
            [0.0, 0.7056, 0.0, 0.0, 0.0, 0.2944, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            [0.1648, 0.1537, 0.0, 0.1673, 0.2361, 0.1734, 0.1047],
            [0.0, 0.3102, 0.6450, 0.0, 0.0, 0.0447, 0.0],
            [0.0, 0.9998, 0.0001, 0.0, 0.0, 0.0001, 0.0],
            [0.0001, 0.9999, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.6259, 0.0, 0.3741, 0.0, 0.0, 0.0],
        ]),
        d: Some([0.0943, 0.3622, 1.0, 0.1508, 0.9107, 0.4437, 0.1949]),
        s: None,
        phi: Some([1.0, 0.8170, 1.0, 1.0, 1.0, 1.0, 1.0]),
        z: None,
    },
    RawParams {
        family: Family::Repo,
        lag: 2,
        w: [
            [0.0258, 0.6680, 0.0, 0.0, 0.0, 0.3062, 0.0],
            [0.0, 0.3678, 0.0, 0.0, 0.0, 0.6322, 0.0],
            [0.1718, 0.0, 0.6286, 0.0, 0.1996, 0.0, 0.0],
            [0.0, 0.4676, 0.5166, 0.0155, 0.0003, 0.0, 0.0],
            [0.0495, 0.0, 0.0, 0.0, 0.9505, 0.0, 0.0],
            [0.0, 0.5212, 0.0, 0.0, 0.0, 0.3034, 0.1754],
            [0.0, 0.7728, 0.0, 0.0, 0.0, 0.0, 0.2272],
        ],
        a: Some([
            [0.0, 0.6857, 0.0, 0.0, 0.0, 0.3143, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            [0.4626, 0.0, 0.0, 0.0, 0.5374, 0.0, 0.0],
            [0.0, 0.4750, 0.5247, 0.0, 0.0003, 0.0, 0.0],
            [0.9997, 0.0, 0.0001, 0.0, 0.0, 0.0, 0.0002],
            [0.0, 0.7483, 0.0, 0.0, 0.0, 0.0, 0.2517],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ]),
        d: Some([0.0258, 0.3678, 0.6286, 0.0155, 0.9505, 0.3034, 0.2272]),
        s: None,
        phi: Some([1.0, 1.0, 0.4608, 0.7261, 0.7869, 0.9998, 0.8164]),
        z: None,
    },
];

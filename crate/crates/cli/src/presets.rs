//! Named studies for the manufactured problems, with the reference values
//! they are checked against.

use tfk_core::fem::{IcTesting, DEFAULT_QUAD_ORDER};

use crate::check::{Check, Expectation, RateCheck};
use crate::config::{Ladder, Level, Norm, Outputs, ParamSet, Reference, Scheme, StepRule, StudyConfig, Variant};

/// Reference grid for the second example: M = N = 4096 on T = 0.5.
pub const EXAMPLE2_REFERENCE: Reference = Reference::FineGrid { cells: 4096, steps: 4096 };

pub struct Preset {
    pub config: StudyConfig,
    pub expectation: Expectation,
    pub check: Check,
}

pub const NAMES: [&str; 12] = [
    "ex1-fdm-time",
    "ex1-fdm-time-general",
    "ex1-fdm-joint",
    "ex1-fdm-joint-general",
    "ex1-fem-tau-h",
    "ex1-fem-tau-h2",
    "ex1-fem-tau-h-general",
    "ex1-fem-tau-h2-general",
    "ex2-fdm-time",
    "ex2-fdm-joint",
    "ex2-fem-tau-h",
    "ex2-fem-tau-h2",
];

fn example1_params() -> Vec<ParamSet> {
    vec![
        ParamSet::new(0.3, 3.0, 1.0, 1.0),
        ParamSet::new(0.5, 3.0, 5.0, 0.0),
        ParamSet::new(0.8, 3.0, 0.0, 10.0),
    ]
}

fn example2_params() -> Vec<ParamSet> {
    vec![
        ParamSet::new(0.3, 0.0, 0.0, 5.0),
        ParamSet::new(0.5, 3.0, 0.0, 5.0),
        ParamSet::new(0.8, 5.0, 0.0, 5.0),
    ]
}

#[allow(clippy::too_many_arguments)]
fn config(
    name: &str,
    scheme: Scheme,
    variant: Variant,
    example: u8,
    t_final: f64,
    ladder: Ladder,
    reference: Reference,
    norms: Vec<Norm>,
) -> StudyConfig {
    StudyConfig {
        name: name.into(),
        scheme,
        variant,
        example,
        t_final,
        params: if example == 1 { example1_params() } else { example2_params() },
        ladder,
        reference,
        norms,
        quad_order: DEFAULT_QUAD_ORDER,
        ic_testing: IcTesting::Exact,
        jacobi_order: 32,
        outputs: Outputs::default(),
    }
}

fn time_ladder(cells: usize, steps: &[usize]) -> Ladder {
    Ladder::Explicit {
        levels: steps.iter().map(|&n| Level { cells, steps: n }).collect(),
    }
}

fn rule(rule: StepRule) -> Ladder {
    Ladder::Rule {
        rule,
        cells: vec![16, 32, 64],
    }
}

/// Rows are levels, columns are parameter sets.
type Block = [[f64; 3]; 3];
type RateBlock = [[f64; 3]; 2];

fn expect(blocks: &[(Block, RateBlock)]) -> Expectation {
    Expectation {
        values: blocks.iter().map(|(v, _)| v.iter().map(|r| r.to_vec()).collect()).collect(),
        rates: blocks.iter().map(|(_, r)| r.iter().map(|r| r.to_vec()).collect()).collect(),
    }
}

pub fn preset(name: &str) -> Option<Preset> {
    use Norm::*;
    use Scheme::*;
    use Variant::*;
    let fdm_norms = || vec![SpacetimeMax, SpacetimeH1];
    let final_norms = || vec![FinalMax, FinalH1];
    let p = match name {
        "ex1-fdm-time" => Preset {
            config: config(name, Fdm, ZeroIc, 1, 1.0, time_ladder(2048, &[128, 256, 512]), Reference::Exact, fdm_norms()),
            expectation: expect(&[
                (
                    [[1.1075e-06, 1.2351e-06, 5.8745e-06], [5.5468e-07, 6.2154e-07, 2.9626e-06], [2.7751e-07, 3.1188e-07, 1.4869e-06]],
                    [[0.9976, 0.9907, 0.9876], [0.9991, 0.9949, 0.9946]],
                ),
                (
                    [[2.6618e-06, 3.5930e-06, 1.6728e-05], [1.3343e-06, 1.8094e-06, 8.4359e-06], [6.6784e-07, 9.0812e-07, 4.2324e-06]],
                    [[0.9964, 0.9897, 0.9877], [0.9985, 0.9946, 0.9951]],
                ),
            ]),
            check: Check {
                value_rel: Some(0.05),
                rate: RateCheck::Reference { tol: 0.05 },
            },
        },
        "ex1-fdm-time-general" => Preset {
            config: config(name, Fdm, GeneralIc, 1, 1.0, time_ladder(2048, &[128, 256, 512]), Reference::Exact, fdm_norms()),
            expectation: expect(&[
                (
                    [[1.6347e-05, 2.0377e-05, 6.9109e-05], [8.2423e-06, 1.0326e-05, 3.5002e-05], [4.1381e-06, 5.1977e-06, 1.7610e-05]],
                    [[0.9879, 0.9807, 0.9814], [0.9941, 0.9903, 0.9911]],
                ),
                (
                    [[4.6496e-05, 6.8074e-05, 1.9591e-04], [2.3450e-05, 3.4511e-05, 9.9249e-05], [1.1776e-05, 1.7378e-05, 4.9944e-05]],
                    [[0.9875, 0.9800, 0.9811], [0.9938, 0.9898, 0.9907]],
                ),
            ]),
            check: Check {
                value_rel: Some(0.10),
                rate: RateCheck::Reference { tol: 0.05 },
            },
        },
        "ex1-fdm-joint" => Preset {
            config: config(name, Fdm, ZeroIc, 1, 1.0, rule(StepRule::TauEqHSquared), Reference::Exact, fdm_norms()),
            expectation: expect(&[
                (
                    [[2.9913e-06, 6.6574e-06, 7.5610e-05], [7.4620e-07, 1.6625e-06, 1.8583e-05], [1.8646e-07, 4.1552e-07, 4.6304e-06]],
                    [[2.0031, 2.0016, 2.0246], [2.0007, 2.0004, 2.0048]],
                ),
                (
                    [[7.9241e-06, 2.1450e-05, 5.3436e-04], [1.9817e-06, 5.3784e-06, 1.3292e-04], [4.9547e-07, 1.3456e-06, 3.3188e-05]],
                    [[1.9995, 1.9957, 2.0073], [1.9999, 1.9989, 2.0018]],
                ),
            ]),
            check: Check {
                value_rel: Some(0.05),
                rate: RateCheck::Fixed { target: 2.0, tol: 0.05 },
            },
        },
        "ex1-fdm-joint-general" => Preset {
            config: config(name, Fdm, GeneralIc, 1, 1.0, rule(StepRule::TauEqHSquared), Reference::Exact, fdm_norms()),
            expectation: expect(&[
                (
                    [[1.1756e-05, 2.3316e-05, 2.7890e-04], [2.9399e-06, 5.8392e-06, 6.8873e-05], [7.3505e-07, 1.4606e-06, 1.7179e-05]],
                    [[1.9996, 1.9975, 2.0178], [1.9998, 1.9992, 2.0033]],
                ),
                (
                    [[2.9254e-05, 6.3071e-05, 1.4813e-03], [7.3311e-06, 1.5825e-05, 3.6924e-04], [1.8339e-06, 3.9600e-06, 9.2242e-05]],
                    [[1.9966, 1.9947, 2.0042], [1.9991, 1.9987, 2.0010]],
                ),
            ]),
            check: Check {
                value_rel: Some(0.10),
                rate: RateCheck::Fixed { target: 2.0, tol: 0.05 },
            },
        },
        "ex1-fem-tau-h" => Preset {
            config: config(name, Fem, ZeroIc, 1, 1.0, rule(StepRule::TauEqH), Reference::Exact, vec![Energy]),
            expectation: expect(&[(
                [[3.1340e-04, 2.9617e-04, 2.8873e-03], [1.5555e-04, 1.4700e-04, 1.4190e-03], [7.7477e-05, 7.3149e-05, 7.0208e-04]],
                [[1.0106, 1.0106, 1.0248], [1.0055, 1.0069, 1.0151]],
            )]),
            check: Check {
                value_rel: Some(0.15),
                rate: RateCheck::Fixed { target: 1.0, tol: 0.07 },
            },
        },
        "ex1-fem-tau-h2" => Preset {
            config: config(name, Fem, ZeroIc, 1, 1.0, rule(StepRule::TauEqHSquared), Reference::Exact, vec![Energy]),
            expectation: expect(&[(
                [[3.0837e-04, 2.8818e-04, 2.7588e-03], [1.5410e-04, 1.4446e-04, 1.3844e-03], [7.7037e-05, 7.2275e-05, 6.9285e-04]],
                [[1.0008, 0.9963, 0.9947], [1.0002, 0.9991, 0.9987]],
            )]),
            check: Check {
                value_rel: Some(0.15),
                rate: RateCheck::Fixed { target: 1.0, tol: 0.07 },
            },
        },
        "ex1-fem-tau-h-general" => Preset {
            config: config(name, Fem, GeneralIc, 1, 1.0, rule(StepRule::TauEqH), Reference::Exact, vec![Energy]),
            expectation: expect(&[(
                [[3.1677e-03, 2.3810e-03, 9.9236e-03], [1.6769e-03, 1.2970e-03, 4.9773e-03], [8.6229e-04, 6.7730e-04, 2.4903e-03]],
                [[0.9176, 0.8763, 0.9955], [0.9595, 0.9374, 0.9990]],
            )]),
            check: Check {
                value_rel: Some(0.15),
                rate: RateCheck::Reference { tol: 0.05 },
            },
        },
        "ex1-fem-tau-h2-general" => Preset {
            config: config(name, Fem, GeneralIc, 1, 1.0, rule(StepRule::TauEqHSquared), Reference::Exact, vec![Energy]),
            expectation: expect(&[(
                [[3.5166e-03, 2.7857e-03, 9.8866e-03], [1.7676e-03, 1.4047e-03, 4.9619e-03], [8.8499e-04, 7.0384e-04, 2.4833e-03]],
                [[0.9924, 0.9878, 0.9946], [0.9981, 0.9969, 0.9986]],
            )]),
            check: Check {
                value_rel: Some(0.15),
                rate: RateCheck::Reference { tol: 0.05 },
            },
        },
        "ex2-fdm-time" => Preset {
            config: config(name, Fdm, ZeroIc, 2, 0.5, time_ladder(2048, &[64, 128, 256]), EXAMPLE2_REFERENCE, final_norms()),
            expectation: expect(&[
                (
                    [[2.1296e-04, 6.4417e-04, 2.6421e-03], [1.0480e-04, 3.1900e-04, 1.3162e-03], [5.0722e-05, 1.5484e-04, 6.4073e-04]],
                    [[1.0229, 1.0139, 1.0053], [1.0470, 1.0428, 1.0386]],
                ),
                (
                    [[4.7631e-04, 1.4418e-03, 5.9332e-03], [2.3441e-04, 7.1397e-04, 2.9557e-03], [1.1345e-04, 3.4655e-04, 1.4389e-03]],
                    [[1.0229, 1.0139, 1.0053], [1.0470, 1.0428, 1.0386]],
                ),
            ]),
            check: Check {
                value_rel: None,
                rate: RateCheck::Fixed { target: 1.0, tol: 0.08 },
            },
        },
        "ex2-fdm-joint" => Preset {
            config: config(
                name,
                Fdm,
                ZeroIc,
                2,
                0.5,
                // N = 1/h², so τ = T·h²
                Ladder::Explicit {
                    levels: [16, 32, 64].iter().map(|&m| Level { cells: m, steps: m * m }).collect(),
                },
                EXAMPLE2_REFERENCE,
                final_norms(),
            ),
            expectation: expect(&[
                (
                    [[1.0019e-03, 1.1577e-03, 1.6511e-03], [2.4892e-04, 2.8575e-04, 3.8684e-04], [6.0962e-05, 6.8576e-05, 7.1566e-05]],
                    [[2.0090, 2.0184, 2.0937], [2.0297, 2.0590, 2.4344]],
                ),
                (
                    [[2.4312e-03, 2.7401e-03, 3.7190e-03], [6.0597e-04, 6.7931e-04, 8.7433e-04], [1.4917e-04, 1.6489e-04, 1.6538e-04]],
                    [[2.0043, 2.0121, 2.0887], [2.0223, 2.0426, 2.4024]],
                ),
            ]),
            check: Check {
                value_rel: None,
                rate: RateCheck::Fixed { target: 2.0, tol: 0.45 },
            },
        },
        "ex2-fem-tau-h" => Preset {
            config: config(name, Fem, ZeroIc, 2, 0.5, rule(StepRule::TauEqH), Reference::Refinement, vec![RefinementH1]),
            expectation: expect(&[(
                [[6.8170e-02, 7.2097e-02, 8.0231e-02], [3.4093e-02, 3.6046e-02, 4.0452e-02], [1.7047e-02, 1.8021e-02, 2.0323e-02]],
                [[0.9997, 1.0001, 0.9879], [1.0000, 1.0002, 0.9931]],
            )]),
            check: Check {
                value_rel: Some(0.15),
                rate: RateCheck::Fixed { target: 1.0, tol: 0.05 },
            },
        },
        "ex2-fem-tau-h2" => Preset {
            config: config(name, Fem, ZeroIc, 2, 0.5, rule(StepRule::TauEqHSquared), Reference::Refinement, vec![RefinementH1]),
            expectation: expect(&[(
                [[6.8112e-02, 7.1635e-02, 7.5383e-02], [3.4072e-02, 3.5832e-02, 3.7672e-02], [1.7038e-02, 1.7918e-02, 1.8833e-02]],
                [[0.9993, 0.9994, 1.0008], [0.9998, 0.9998, 1.0002]],
            )]),
            check: Check {
                value_rel: Some(0.15),
                rate: RateCheck::Fixed { target: 1.0, tol: 0.05 },
            },
        },
        _ => return None,
    };
    Some(p)
}

use super::{FractionProfile, InitialData, OutputSpec, ScenarioConfig, ScenarioError};
use crate::kinetics::{ConsumptionSpec, GrowthSpec, ModelParameters, NutrientInput, NutrientMode, TransitionSpec};
use crate::solver::{BoundaryMode, SolverConfig};

pub const PRESET_NAMES: [&str; 18] = [
    "fig-s4limit-gamma5",
    "fig-s4limit-gamma20",
    "fig-s4limit-gamma80",
    "fig-s4f2-D0.3",
    "fig-s4f2-D0.5",
    "fig-s3unicon",
    "fig-s3unicon-gamma2",
    "fig-s3l2n-a",
    "fig-s3l2n-b",
    "fig-s4fin",
    "fig-necrotic",
    "neumann-autohelp-k0",
    "neumann-autohelp-k2",
    "neumann-autohelp-k8",
    "neumann-periodic-T20",
    "neumann-periodic-T40",
    "neumann-logistic",
    "neumann-s5f1-gamma40",
];

const DX: f64 = 0.04;
const DT: f64 = 0.002;

fn free_space(gamma: f64, g: f64, a: f64, d: f64, transitions: TransitionSpec) -> ModelParameters {
    ModelParameters {
        gamma,
        extra_death: d,
        supply: a,
        c_boundary: 1.0,
        growth: GrowthSpec::Proportional { g },
        consumption: ConsumptionSpec::Linear,
        transitions,
        nutrient: NutrientMode::QuasiStaticDirichlet,
    }
}

fn constants(k1: f64, k2: f64) -> TransitionSpec {
    TransitionSpec::Constants { k1, k2 }
}

fn padded_solver(sample_interval: f64) -> SolverConfig {
    SolverConfig {
        sample_interval,
        ..SolverConfig::padded(DX, DT)
    }
}

fn analytic_start(mu0: FractionProfile) -> InitialData {
    InitialData::AnalyticPressure {
        r0: 1.0,
        mu0,
        pressure_mu: None,
    }
}

fn scenario(
    name: &str,
    model: ModelParameters,
    solver: SolverConfig,
    initial: InitialData,
    t_end: f64,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        model,
        solver,
        initial,
        t_end,
        outputs: OutputSpec::default(),
    }
}

fn limit(name: &str, gamma: f64) -> ScenarioConfig {
    scenario(
        name,
        free_space(gamma, 1.0, 0.5, 0.3, constants(1.0, 1.0)),
        padded_solver(0.05),
        analytic_start(FractionProfile::Equilibrium),
        1.0,
    )
}

fn radius_growth(name: &str, d: f64) -> ScenarioConfig {
    scenario(
        name,
        free_space(80.0, 1.0, 0.5, d, constants(1.0, 1.0)),
        padded_solver(0.1),
        analytic_start(FractionProfile::Equilibrium),
        20.0,
    )
}

fn well_mixed(name: &str, gamma: f64) -> ScenarioConfig {
    scenario(
        name,
        free_space(gamma, 1.0, 0.4, 0.3, constants(1.0, 1.0)),
        padded_solver(0.02),
        analytic_start(FractionProfile::Cosine),
        3.0,
    )
}

fn l2n(name: &str, k2: f64, dt: f64) -> ScenarioConfig {
    scenario(
        name,
        free_space(80.0, 1.0, 0.5, 0.1, constants(0.1, k2)),
        SolverConfig {
            dt,
            ..padded_solver(0.05)
        },
        analytic_start(FractionProfile::Cosine),
        10.0,
    )
}

fn neumann(
    name: &str,
    growth: GrowthSpec,
    gamma: f64,
    d: f64,
    hull: (f64, f64),
    input: NutrientInput,
    t_end: f64,
) -> ScenarioConfig {
    scenario(
        name,
        ModelParameters {
            gamma,
            extra_death: d,
            supply: 0.5,
            c_boundary: 1.0,
            growth,
            consumption: ConsumptionSpec::Linear,
            transitions: TransitionSpec::Hull {
                k1_max: hull.0,
                k2_max: hull.1,
                omega: 0.5,
            },
            nutrient: NutrientMode::DynamicNeumann { input },
        },
        SolverConfig {
            boundary: BoundaryMode::NeumannBox {
                x_min: -5.0,
                x_max: 5.0,
            },
            ..padded_solver(0.1)
        },
        InitialData::CustomCosh {
            r: 4.0,
            mu0: FractionProfile::Constant { value: 1.0 },
        },
        t_end,
    )
}

fn autohelp(name: &str, k1_max: f64) -> ScenarioConfig {
    neumann(
        name,
        GrowthSpec::AffineDeath { delta: 0.5 },
        40.0,
        0.1,
        (k1_max, 1.0),
        NutrientInput::Constant { value: 0.2 },
        40.0,
    )
}

fn periodic(name: &str, period: f64, growth: GrowthSpec) -> ScenarioConfig {
    neumann(
        name,
        growth,
        40.0,
        0.1,
        (2.0, 1.0),
        NutrientInput::Periodic { high: 0.5, period },
        4.0 * period,
    )
}

/// Built-in scenario by name.
pub fn preset(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let cfg = match name {
        "fig-s4limit-gamma5" => limit(name, 5.0),
        "fig-s4limit-gamma20" => limit(name, 20.0),
        "fig-s4limit-gamma80" => limit(name, 80.0),
        "fig-s4f2-D0.3" => radius_growth(name, 0.3),
        "fig-s4f2-D0.5" => radius_growth(name, 0.5),
        "fig-s3unicon" => well_mixed(name, 80.0),
        "fig-s3unicon-gamma2" => well_mixed(name, 2.0),
        "fig-s3l2n-a" => l2n(name, 1.0, DT),
        // The tumor reaches R ≈ 35 by t = 10; the front needs a finer step.
        "fig-s3l2n-b" => l2n(name, 0.01, DT / 8.0),
        "fig-s4fin" => scenario(
            name,
            free_space(80.0, 1.0, 0.5, 0.3, TransitionSpec::RationalPair),
            padded_solver(0.1),
            InitialData::AnalyticPressure {
                r0: 1.0,
                mu0: FractionProfile::Constant { value: 0.5 },
                pressure_mu: None,
            },
            10.0,
        ),
        "fig-necrotic" => scenario(
            name,
            free_space(80.0, 1.0, 0.5, 0.7, constants(1.0, 1.0)),
            padded_solver(0.25),
            analytic_start(FractionProfile::Equilibrium),
            30.0,
        ),
        "neumann-autohelp-k0" => autohelp(name, 0.0),
        "neumann-autohelp-k2" => autohelp(name, 2.0),
        "neumann-autohelp-k8" => autohelp(name, 8.0),
        "neumann-periodic-T20" => periodic(name, 20.0, GrowthSpec::AffineDeath { delta: 0.5 }),
        "neumann-periodic-T40" => periodic(name, 40.0, GrowthSpec::AffineDeath { delta: 0.5 }),
        "neumann-logistic" => periodic(
            name,
            20.0,
            GrowthSpec::Logistic {
                g: 2.0,
                capacity: 1.2,
                delta: 0.5,
            },
        ),
        "neumann-s5f1-gamma40" => neumann(
            name,
            GrowthSpec::AffineDeath { delta: 0.1 },
            40.0,
            0.5,
            (3.0, 3.0),
            NutrientInput::Constant { value: 0.2 },
            20.0,
        ),
        _ => {
            return Err(ScenarioError::UnknownPreset { name: name.to_string() });
        }
    };
    Ok(cfg)
}

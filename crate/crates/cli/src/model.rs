//! Turns a [`ModelConfig`] into the kernel and nonlinearity of a scalar
//! profile equation.

use semiwave::dispersion::DispersionFunction;
use semiwave::error::Result;
use semiwave::kernels::Kernel;
use semiwave::models::{EpidemicModel, PopulationModel};
use semiwave::profile::{Birth, Nonlinearity, Removal};

use crate::config::{KernelConfig, ModelConfig};

#[derive(Debug, Clone)]
pub enum Extra {
    None,
    Epidemic(EpidemicModel),
    Population(PopulationModel),
}

/// The scalar equation a configured model reduces to.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: &'static str,
    pub kernel: Kernel,
    pub nl: Nonlinearity,
    pub extra: Extra,
}

fn nonlinearity(removal: Removal, birth: Birth, majorant: Option<f64>) -> Nonlinearity {
    let nl = Nonlinearity::new(removal, birth);
    match majorant {
        Some(l) => nl.with_majorant(l),
        None => nl,
    }
}

pub fn kernel(cfg: &KernelConfig) -> Result<Kernel> {
    match cfg {
        KernelConfig::Marine {
            advection,
            diffusivity,
            death,
        } => Kernel::marine(*advection, *diffusivity, *death),
        KernelConfig::Separable { temporal, spatial } => Kernel::separable(temporal.clone(), spatial.clone()),
        KernelConfig::Local => Ok(Kernel::local()),
    }
}

impl Resolved {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        Ok(match cfg {
            ModelConfig::Marine {
                advection,
                diffusivity,
                death,
                adult_death,
                p,
            } => Resolved {
                name: "marine",
                kernel: Kernel::marine(*advection, *diffusivity, *death)?,
                nl: Nonlinearity::new(Removal::Linear { rate: *adult_death }, Birth::BevertonHolt { p: *p, b: 1.0 }),
                extra: Extra::None,
            },
            ModelConfig::Epidemic {
                alpha,
                latency,
                contact,
                removal,
                birth,
                majorant,
            } => {
                let m = EpidemicModel::new(
                    *alpha,
                    latency.clone(),
                    contact.clone(),
                    nonlinearity(*removal, *birth, *majorant),
                )?;
                Resolved {
                    name: "epidemic",
                    kernel: m.reduced_kernel()?,
                    nl: m.reduced_nonlinearity(),
                    extra: Extra::Epidemic(m),
                }
            }
            ModelConfig::Population {
                immature_diffusivity,
                immature_death,
                kernel: k,
                removal,
                birth,
                majorant,
            } => {
                let nl = nonlinearity(*removal, *birth, *majorant);
                let k = kernel(k)?;
                let m = PopulationModel::new(*immature_diffusivity, *immature_death, k.clone(), nl.clone())?;
                Resolved {
                    name: "population",
                    kernel: k,
                    nl,
                    extra: Extra::Population(m),
                }
            }
            ModelConfig::Scalar {
                kernel: k,
                removal,
                birth,
                majorant,
            } => Resolved {
                name: "scalar",
                kernel: kernel(k)?,
                nl: nonlinearity(*removal, *birth, *majorant),
                extra: Extra::None,
            },
        })
    }

    /// Linearization at zero.
    pub fn chi0(&self) -> Result<DispersionFunction> {
        let c = self.nl.consts;
        DispersionFunction::new(c.f_prime0, c.g_prime0, self.kernel.clone())
    }

    /// Linear majorant version.
    pub fn chi_l(&self) -> Result<DispersionFunction> {
        let c = self.nl.consts;
        DispersionFunction::new(c.f_inf_slope, c.l, self.kernel.clone())
    }

    /// `L = g'(0)` and `inf f' = f'(0)`, in which case both speeds agree.
    pub fn majorant_is_tight(&self) -> bool {
        let c = self.nl.consts;
        c.l == c.g_prime0 && c.f_inf_slope == c.f_prime0
    }
}

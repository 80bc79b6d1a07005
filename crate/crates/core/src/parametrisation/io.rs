use serde::{Deserialize, Serialize};

use super::{Parametrisation, Settings};

/// Serialisable view of a parametrisation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientDump {
    pub settings: Settings,
    pub order_na: usize,
    pub lambdas: Vec<[f64; 2]>,
    pub monomials: Vec<MonomialDump>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonomialDump {
    pub alpha: Vec<u16>,
    pub sigma: [f64; 2],
    pub resonant: Vec<usize>,
    #[serde(rename = "W")]
    pub w: Vec<[f64; 2]>,
    pub f: Vec<[f64; 2]>,
}

impl Parametrisation {
    pub fn dump(&self) -> CoefficientDump {
        CoefficientDump {
            settings: self.settings.clone(),
            order_na: self.order_na,
            lambdas: self.lambdas.iter().map(|z| [z.re, z.im]).collect(),
            monomials: self
                .iter()
                .map(|(alpha, coef)| MonomialDump {
                    alpha: alpha.exps().to_vec(),
                    sigma: [coef.sigma.re, coef.sigma.im],
                    resonant: (0..2).filter(|s| coef.resonant & (1 << s) != 0).collect(),
                    w: coef.w.iter().map(|z| [z.re, z.im]).collect(),
                    f: coef.f.iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(&self.dump())?)
    }
}

//! Resolving a system argument: a network file or one of the built-ins.

use std::fs;

use netmeasure_core::dsl::{mass_action_field, parse_network, ReactionNetwork};
use netmeasure_core::lyapunov::{ConstantNoise, IdentityNoise, NoiseModel};
use netmeasure_core::mc::fingerprint;
use netmeasure_core::{builtin, IndexSet, VectorField};

use crate::error::{CliError, CliResult};

pub enum Kind {
    Network(ReactionNetwork),
    Ou(usize),
    LimitCycle,
}

pub struct System {
    pub kind: Kind,
    pub names: Vec<String>,
    pub field: Box<dyn VectorField>,
}

impl System {
    pub fn load(arg: &str) -> CliResult<Self> {
        if let Some(rest) = arg.strip_prefix("builtin:") {
            return Self::builtin(arg, rest);
        }
        let text = fs::read_to_string(arg).map_err(|e| CliError::parse(format!("{arg}: {e}")))?;
        let net = parse_network(&text).map_err(|e| CliError::from(e).context(arg))?;
        Ok(Self::from_network(net))
    }

    pub fn from_network(net: ReactionNetwork) -> Self {
        let names = net.species().iter().map(|s| s.name.clone()).collect();
        let field = Box::new(mass_action_field(&net));
        Self {
            kind: Kind::Network(net),
            names,
            field,
        }
    }

    fn builtin(arg: &str, rest: &str) -> CliResult<Self> {
        let mut parts = rest.split(':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("ou"), n, None) => {
                let n = match n {
                    None => 1,
                    Some(t) => t
                        .parse::<usize>()
                        .ok()
                        .filter(|&n| n >= 1)
                        .ok_or_else(|| CliError::parse(format!("bad dimension in `{arg}`")))?,
                };
                Ok(Self {
                    kind: Kind::Ou(n),
                    names: (1..=n).map(|i| format!("x{i}")).collect(),
                    field: Box::new(builtin::ou(n)),
                })
            }
            (Some("limitcycle"), None, None) => Ok(Self {
                kind: Kind::LimitCycle,
                names: ["x", "y", "z"].map(String::from).to_vec(),
                field: Box::new(builtin::limit_cycle()),
            }),
            _ => Err(CliError::parse(format!(
                "unknown built-in `{arg}`; expected builtin:ou[:n] or builtin:limitcycle"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn network(&self) -> Option<&ReactionNetwork> {
        match &self.kind {
            Kind::Network(net) => Some(net),
            _ => None,
        }
    }

    /// Canonical text of the drift, independent of file name and layout.
    pub fn description(&self) -> String {
        match &self.kind {
            Kind::Network(net) => net.to_string(),
            Kind::Ou(n) => format!("builtin:ou:{n}"),
            Kind::LimitCycle => "builtin:limitcycle".into(),
        }
    }

    /// Fingerprint of drift plus noise, shared by ensembles and reports.
    pub fn fingerprint(&self, noise: &dyn NoiseModel) -> String {
        fingerprint(&format!("{}\nnoise: {}", self.description(), noise.describe()))
    }

    /// Newton starting point.
    pub fn initial_guess(&self) -> Vec<f64> {
        match self.kind {
            Kind::Network(_) => vec![1.0; self.dim()],
            Kind::Ou(n) => vec![0.5; n],
            Kind::LimitCycle => vec![0.0; 3],
        }
    }

    pub fn index(&self, name: &str) -> CliResult<usize> {
        self.names
            .iter()
            .position(|n| n == name.trim())
            .ok_or_else(|| CliError::mismatch(format!("unknown species `{}`", name.trim())))
    }

    /// `A,B` into an index set.
    pub fn index_set(&self, spec: &str) -> CliResult<IndexSet> {
        let set: IndexSet = spec
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| self.index(t))
            .collect::<CliResult<_>>()?;
        if set.is_empty() {
            return Err(CliError::parse(format!("empty species set `{spec}`")));
        }
        Ok(set)
    }

    /// `I1;I2;O` into three index sets.
    pub fn triple(&self, spec: &str) -> CliResult<(IndexSet, IndexSet, IndexSet)> {
        let parts: Vec<&str> = spec.split(';').collect();
        let [a, b, o] = parts.as_slice() else {
            return Err(CliError::parse(format!("expected `I1;I2;O`, got `{spec}`")));
        };
        Ok((self.index_set(a)?, self.index_set(b)?, self.index_set(o)?))
    }

    pub fn set_names(&self, set: &IndexSet) -> Vec<String> {
        set.iter().map(|i| self.names[i].clone()).collect()
    }

    /// `identity`, `scalar:c` or `diag:v1,v2,...`.
    pub fn noise(&self, spec: &str) -> CliResult<Box<dyn NoiseModel>> {
        let n = self.dim();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::parse(format!("bad number `{t}` in --sigma")))
        };
        if spec == "identity" {
            return Ok(Box::new(IdentityNoise(n)));
        }
        if let Some(c) = spec.strip_prefix("scalar:") {
            return Ok(Box::new(ConstantNoise::scalar(n, num(c)?)));
        }
        if let Some(list) = spec.strip_prefix("diag:") {
            let d: Vec<f64> = list.split(',').map(num).collect::<CliResult<_>>()?;
            if d.len() != n {
                return Err(CliError::mismatch(format!(
                    "--sigma diag has {} entries, system has {n} coordinates",
                    d.len()
                )));
            }
            return Ok(Box::new(ConstantNoise::diagonal(&d)));
        }
        Err(CliError::parse(format!(
            "bad --sigma `{spec}`; expected identity, scalar:c or diag:v1,...,vn"
        )))
    }
}

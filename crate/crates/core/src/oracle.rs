//! Reference values attached to sampled estimates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::exact::{brute_force_pairs, onsager_nn_correlation, transfer_matrix, two_site_closed_form, ExactResult};
use crate::model::{BondClass, CouplingGraph, Lattice};
use crate::observable::Observable;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oracle {
    /// Closed form for a single bond.
    TwoSite,
    /// Row transfer matrix of a uniform rectangle.
    Transfer,
    /// Infinite square lattice; nearest-neighbour correlation only.
    Onsager,
    /// Enumeration of all spin configurations.
    Brute,
    None,
}

impl Oracle {
    /// Value of the `oracle_name` column, absent for [`Oracle::None`].
    pub fn name(self) -> Option<&'static str> {
        match self {
            Oracle::TwoSite => Some("two-site"),
            Oracle::Transfer => Some("transfer"),
            Oracle::Onsager => Some("onsager"),
            Oracle::Brute => Some("brute"),
            Oracle::None => None,
        }
    }

    /// Reference value of each observable at `beta`, `None` where this
    /// oracle has nothing to say. `lattice` is required by
    /// [`Oracle::Transfer`] and must describe `graph`.
    pub fn values(
        self,
        graph: &CouplingGraph,
        lattice: Option<&Lattice>,
        beta: f64,
        observables: &[Observable],
    ) -> Result<Vec<Option<f64>>, Error> {
        if self == Oracle::None {
            return Ok(vec![None; observables.len()]);
        }
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::Config(format!("inverse temperature {beta} must be positive")));
        }
        match self {
            Oracle::TwoSite => {
                let [edge] = graph.edges() else {
                    return Err(Error::Config("the two-site oracle needs exactly two sites and one bond".into()));
                };
                let fields = graph.fields();
                if graph.sites() != 2 || fields[0] != fields[1] {
                    return Err(Error::Config("the two-site oracle needs two sites in a uniform field".into()));
                }
                let exact = two_site_closed_form(edge.coupling, fields[0], beta);
                Ok(observables.iter().map(|o| from_exact(&exact, *o)).collect())
            }
            Oracle::Transfer => {
                let lattice = lattice.ok_or_else(|| Error::Config("the transfer oracle needs a lattice model".into()))?;
                let exact = transfer_matrix(lattice, beta)?;
                Ok(observables
                    .iter()
                    .map(|&o| match o {
                        Observable::Correlation(i, j) if lattice.periodic => {
                            let representative = match lattice.bond_class(i, j)? {
                                BondClass::Horizontal => (0, 1),
                                BondClass::Vertical => (0, lattice.width),
                            };
                            exact.correlation(representative.0, representative.1)
                        }
                        other => from_exact(&exact, other),
                    })
                    .collect())
            }
            Oracle::Onsager => {
                let value = onsager_nn_correlation(beta, graph.mean_coupling())?;
                Ok(observables
                    .iter()
                    .map(|o| (*o == Observable::NearestNeighbour).then_some(value))
                    .collect())
            }
            Oracle::Brute => {
                let pairs: Vec<(usize, usize)> = observables
                    .iter()
                    .filter_map(|o| match *o {
                        Observable::Correlation(i, j) => Some((i, j)),
                        _ => None,
                    })
                    .collect();
                let exact = brute_force_pairs(graph, beta, &pairs)?;
                Ok(observables.iter().map(|o| from_exact(&exact, *o)).collect())
            }
            Oracle::None => unreachable!(),
        }
    }
}

fn from_exact(exact: &ExactResult, observable: Observable) -> Option<f64> {
    match observable {
        Observable::Magnetization(i) => exact.magnetization.get(i).copied(),
        Observable::Correlation(i, j) => exact.correlation(i, j),
        Observable::NearestNeighbour => exact.mean_edge_correlation,
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name().unwrap_or("none"))
    }
}

impl FromStr for Oracle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "two-site" => Ok(Oracle::TwoSite),
            "transfer" => Ok(Oracle::Transfer),
            "onsager" => Ok(Oracle::Onsager),
            "brute" => Ok(Oracle::Brute),
            "none" => Ok(Oracle::None),
            other => Err(format!("unknown oracle `{other}` (expected two-site, transfer, onsager, brute or none)")),
        }
    }
}

//! Recover a growth rate from noisy total-mass observations with a grid
//! posterior, and watch the posterior settle as the time step shrinks.

use std::sync::Arc;

use popsplit::bayes::{
    posterior_flat_distance, posterior_grid, synthesize_data, uniform_prior, ModelFamily, Noise, Observable,
    ObservationScheme, ParamBox,
};
use popsplit::measure::DiscreteMeasure;
use popsplit::metric_space::{CompactSet, EpsilonNet, Point, Space};
use popsplit::model::{library, ModelSpec};
use popsplit::solver::SolverConfig;

struct Growth {
    space: Arc<Space>,
    net: Arc<EpsilonNet>,
}

impl ModelFamily for Growth {
    fn dimension(&self) -> usize {
        1
    }

    fn build(&self, theta: &[f64]) -> popsplit::Result<(ModelSpec, DiscreteMeasure)> {
        let model = ModelSpec::growth_only(self.space.clone(), self.net.clone(), library::constant_growth(theta[0]))?;
        Ok((model, DiscreteMeasure::dirac(Point::real(0.5), 1.0)?))
    }
}

fn main() -> popsplit::Result<()> {
    let space = Arc::new(Space::interval(0.0, 1.0)?);
    let net = Arc::new(EpsilonNet::build(&space, CompactSet::Whole, 0.5)?);
    let family = Growth { space, net };

    let scheme = ObservationScheme::new(
        vec![0.2, 0.4, 0.6, 0.8, 1.0],
        vec![Observable::total_mass()],
        Noise::Gaussian { sigma: 0.1 },
    )?;
    let theta = ParamBox::new(vec![0.0], vec![2.0], vec![101])?;
    let data = synthesize_data(&family, &[1.1], &scheme, &SolverConfig::new(0.001, 1.0), 2024)?;
    println!("observed masses {:.3?}", data.y[0]);

    let mut previous = None;
    for dt in [0.2, 0.1, 0.05, 0.025] {
        let post = posterior_grid(&data, &uniform_prior(&theta), &theta, &family, &scheme, &SolverConfig::new(dt, 1.0))?;
        let shift = match &previous {
            Some(p) => format!("{:.4}", posterior_flat_distance(p, &post)?),
            None => "-".into(),
        };
        println!(
            "dt = {dt:<6} mode {:.3}  mean {:.4}  ρ_F to previous {shift}",
            post.mode()[0],
            post.mean()[0]
        );
        previous = Some(post);
    }
    Ok(())
}

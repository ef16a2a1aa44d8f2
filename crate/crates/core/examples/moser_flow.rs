//! Relative Moser flow between ω and ω + dβ with β vanishing on L.

use sympdef::coeff::rat;
use sympdef::flows;
use sympdef::{TorusModel, TrigForm, TrigScalar};

fn main() -> sympdef::Result<()> {
    let model = TorusModel::new(1);
    let w1: TrigForm = model.omega_can();
    let beta = TrigForm::monomial(2, &[0], TrigScalar::sin([0, 1].into_iter().collect(), rat(1, 20)));
    let w2 = w1.add(&beta.exterior_derivative());
    for steps in [50, 100, 200, 400] {
        let r = flows::moser_solve(&model, &w1, &w2, &beta, steps, 12)?;
        println!("steps {steps:>4}: residual {:.3e}, L drift {:.1e}", r.residual, r.l_drift);
    }
    Ok(())
}

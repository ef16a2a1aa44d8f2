//! Maurer-Cartan residuals for the Koszul bracket and a gauge path realized by an isotopy.

use sympdef::coeff::rat;
use sympdef::koszul::{Koszul, TimePoly};
use sympdef::{TorusModel, TrigForm, TrigScalar};

fn main() -> sympdef::Result<()> {
    let model = TorusModel::new(1);
    let k = Koszul::canonical(model);
    let beta0 = TrigForm::basis(2, &[0, 1]).scale(&rat(1, 5));
    println!("mc residual of β₀: {} terms", k.mc_residual(&beta0).num_terms());
    // α_t = (1/20) sin(2πy) dx, vanishing on L = {y = 0}
    let alpha = TimePoly {
        coeffs: vec![TrigForm::monomial(2, &[0], TrigScalar::sin([0, 1].into_iter().collect(), rat(1, 20)))],
    };
    let iso = k.gauge_vs_isotopy(&beta0, &alpha, 200, 12)?;
    println!("pullback residual {:.3e}", iso.residual);
    println!("drift of L        {:.3e}", iso.l_drift);
    println!("max mc residual   {:.3e}", iso.max_mc_residual);
    println!("linearization     {:.3e}", k.gauge_linearization_residual(&beta0, &alpha, 1e-4)?);
    Ok(())
}

//! First-order prolongation of a cone cocycle (η, β) to a path of pairs.

use sympdef::coeff::rat;
use sympdef::moduli::Moduli;
use sympdef::{TorusModel, TrigForm};

fn main() -> sympdef::Result<()> {
    let m = Moduli::new(TorusModel::new(1), 2);
    let eta = TrigForm::basis(2, &[0, 1]).scale(&rat(1, 4));
    let beta = TrigForm::zero(1, 1);
    let p = m.prolong_cocycle(&eta, &beta, None)?;
    println!("ε = {:.1e}", p.epsilon);
    println!("|Δω/Δt − η| = {:.3e}", p.omega_error);
    println!("|Δσ/Δt − β| = {:.3e}", p.sigma_error);
    println!("cocycle residual {:.3e}, J coordinates {:?}", p.cocycle_residual, p.j_coords);
    Ok(())
}

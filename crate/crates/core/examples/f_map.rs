//! F(β) = (I + BΠ)^{-1} B on constant forms, and the singular case β = ω.

use sympdef::coeff::rat;
use sympdef::json::form_to_value;
use sympdef::symplectic::ConstantSymplectic;
use sympdef::{TorusModel, TrigForm};

fn main() -> sympdef::Result<()> {
    let model = TorusModel::new(1);
    let base = ConstantSymplectic::canonical(&model);
    for q in [rat(1, 2), rat(1, 5), rat(-1, 1)] {
        let beta = TrigForm::basis(2, &[0, 1]).scale(&q);
        let f = base.f_map_exact(&beta)?;
        println!("β = {q} dx∧dy  ->  F(β) = {}", form_to_value(&f));
        assert_eq!(base.f_inverse_exact(&f)?, beta);
    }
    let omega: TrigForm = model.omega_can();
    match base.f_map(&omega, 8) {
        Err(e) => println!("β = ω rejected: {e}"),
        Ok(_) => println!("β = ω unexpectedly accepted"),
    }
    Ok(())
}

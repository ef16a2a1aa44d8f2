//! d, wedge and Cartan's formula on T².

use sympdef::coeff::rat;
use sympdef::json::form_to_value;
use sympdef::{TrigForm, TrigMultiVector, TrigScalar};

fn main() -> sympdef::Result<()> {
    // α = sin(2πy) dx, X = cos(2πx) ∂_y
    let alpha = TrigForm::monomial(2, &[0], TrigScalar::sin([0, 1].into_iter().collect(), rat(1, 1)));
    let x = TrigMultiVector::monomial(2, &[1], TrigScalar::cos([1, 0].into_iter().collect(), rat(1, 1)));
    let da = alpha.exterior_derivative();
    println!("dα = {}", form_to_value(&da));
    println!("d²α = 0: {}", da.exterior_derivative().is_zero());
    println!("α∧α = 0: {}", alpha.wedge(&alpha).is_zero());
    let lie = alpha.lie_derivative(&x)?;
    let cartan = alpha.contract(&x).exterior_derivative().add(&da.contract(&x));
    println!("L_X α = d ι_X α + ι_X dα: {}", lie == cartan);
    Ok(())
}

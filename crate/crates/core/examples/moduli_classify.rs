//! Realize classes in H²(M, L), classify them back, and build an equivalence witness.

use sympdef::coeff::rat;
use sympdef::moduli::Moduli;
use sympdef::{random, TorusModel};

fn main() -> sympdef::Result<()> {
    let m = Moduli::new(TorusModel::new(1), 2);
    let p1 = m.realize_rational(&[rat(1, 3)], 1.0)?;
    let k1 = m.classify_pair(&p1)?;
    println!("class 1/3 -> coordinates {:?}", k1.coords);

    let (rho, gamma) = m.random_isotopy(&mut random::rng(7), 0.1);
    let p2 = m.transport(&p1, &rho, gamma)?;
    println!("after a random isotopy  {:?}", m.classify_pair(&p2)?.coords);
    let w = m.equivalence_witness(&p1, &p2)?;
    println!("witness residual {:.3e}, L residual {:.3e}", w.residual, w.l_residual);

    let far = m.realize_rational(&[rat(13, 30)], 1.0)?;
    match m.equivalence_witness(&far, &p2) {
        Err(e) => println!("class 13/30: {e}"),
        Ok(_) => println!("class 13/30 unexpectedly equivalent"),
    }
    Ok(())
}

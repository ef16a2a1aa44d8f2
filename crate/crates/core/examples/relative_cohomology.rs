//! Relative, absolute and cone cohomology of (T^{2n}, L) and the isomorphism I.

use sympdef::cochain::{ComplexKind, Engine};
use sympdef::TorusModel;

fn main() -> sympdef::Result<()> {
    for n in [1, 2] {
        let engine = Engine::new(TorusModel::new(n), 1);
        println!("T^{}: relative {:?}", 2 * n, engine.dims(ComplexKind::Relative));
        println!("T^{}: absolute {:?}", 2 * n, engine.dims(ComplexKind::Absolute));
        println!("T^{}: cone     {:?}", 2 * n, engine.dims(ComplexKind::Cone));
        let h2 = engine.cohomology(ComplexKind::Relative, 2);
        for (i, rep) in h2.reps.iter().enumerate() {
            println!("  H²(M,L) basis {i}: {}", sympdef::json::form_to_value(&rep.a));
        }
    }
    Ok(())
}

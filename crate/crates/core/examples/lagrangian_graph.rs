//! The Weinstein chart: φ_L maps L onto the graph of a closed section.

use sympdef::chart::{self, Section};
use sympdef::coeff::rat;
use sympdef::flows;
use sympdef::{TorusModel, TrigForm, TrigScalar};

fn main() -> sympdef::Result<()> {
    let model = TorusModel::new(1);
    let sigma = TrigForm::monomial(1, &[0], TrigScalar::sin([1].into_iter().collect(), rat(1, 5)));
    let s = Section::new(model, sigma)?;
    println!("in chart: {}, sup |σ| = {:.3}", chart::in_chart(&s), s.bound());
    let f = flows::phi_l(&s, 400, &flows::l_points(1, 8))?;
    let cs = s.compile();
    for (p, q) in f.points.iter().zip(&f.images) {
        println!("x = {:.3}  image ({:.6}, {:.6})  σ(x) = {:.6}", p[0], q[0], q[1], cs.value(&p[..1])[0]);
    }
    Ok(())
}

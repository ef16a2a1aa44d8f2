//! Higher derived brackets from V-data on End(W): Jacobi sums up to arity 4.

use sympdef::coeff::{rat, rat_int};
use sympdef::derived::{self, abelian, shifted, EndData, VData};

fn main() {
    let v = EndData::standard();
    println!("[Δ, Δ] = 0: {}", v.bracket(&v.delta(), &v.delta()).is_empty());
    let x = v.add(&v.unit(0, 1, rat_int(1)), &v.unit(2, 3, rat(1, 2)));
    let args = [
        shifted(&v, x),
        shifted(&v, v.unit(1, 1, rat_int(3))),
        abelian(&v, v.unit(0, 2, rat_int(1))),
        abelian(&v, v.unit(1, 3, rat_int(2))),
    ];
    for n in 1..=4 {
        let zero = derived::jacobi_sum(&v, &args[..n]).is_zero();
        println!("arity {n}: generalized Jacobi holds: {zero}");
    }
}

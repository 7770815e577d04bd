//! Hand-built designs for the four-node product example with inputs 1..4.
//!
//! Every node maps the values 1, 2, 3, 4 to the QPSK points 1, −1, i, −i.
//! With a single slot, tuples such as (1,1,2,2) and (1,2,3,4) both sum to 0
//! although their products differ. Sending values {1, 3} in slot 1 and
//! {2, 4} in slot 2 separates every product: the two slot sums reveal how
//! many nodes hold each value.

use num_complex::Complex64;

use crate::codesign::{BinaryMatrix, Design};

fn qpsk() -> Vec<Complex64> {
    vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
    ]
}

/// QPSK on one slot with every symbol active (unit-magnitude points).
pub fn qpsk_single_slot() -> Design {
    Design::new(4, 4, true, qpsk(), BinaryMatrix::ones(4, 1)).expect("valid shape")
}

/// QPSK with values {1,3} on slot 1 and {2,4} on slot 2.
pub fn qpsk_repetition() -> Design {
    let c = BinaryMatrix::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1]])
        .expect("valid rows");
    Design::new(4, 4, true, qpsk(), c).expect("valid shape")
}

impl Design {
    /// Copy scaled to unit total transmit energy.
    pub fn normalized(&self) -> Design {
        let p = self.power();
        let mut out = self.clone();
        if p > 0.0 {
            let s = p.sqrt().recip();
            for z in &mut out.x {
                *z *= s;
            }
        }
        out
    }
}

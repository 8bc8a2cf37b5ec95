//! Exact resemblance of two sets against the minwise and b-bit estimates.

use bbit_svm::dataio::SparseBinarySet;
use bbit_svm::estimation::{
    estimate_resemblance_bbit, estimate_resemblance_minwise, exact_resemblance,
    minwise_estimator_variance, BbitCorrection,
};
use bbit_svm::sketching::{build_family, minhash, truncate, FamilyKind};

fn main() -> bbit_svm::Result<()> {
    let d = 1 << 16;
    // 600 shared elements, 400 private to each side: R = 600 / 1400
    let s1 = SparseBinarySet::new((0..1000).collect(), d)?;
    let s2 = SparseBinarySet::new((400..1400).collect(), d)?;
    let r = exact_resemblance(&s1, &s2)?;
    println!("exact R = {r:.4}");

    let k = 500;
    let family = build_family(FamilyKind::Exact, k, d, 7)?;
    let (m1, m2) = (minhash(&s1, &family)?, minhash(&s2, &family)?);
    let r_m = estimate_resemblance_minwise(&m1, &m2)?;
    let sd = minwise_estimator_variance(r, k).sqrt();
    println!("minwise  k={k}: {r_m:.4}  (sd {sd:.4})");

    for b in [1u8, 2, 4, 8] {
        let est = estimate_resemblance_bbit(&truncate(&m1, b)?, &truncate(&m2, b)?, 1000, 1000, d)?;
        let p = BbitCorrection::new(1000, 1000, d, b)?.collision_probability(r);
        println!(
            "b={b}: matches {:.4} (theory {p:.4})  R_b = {:.4}",
            est.match_fraction, est.resemblance
        );
    }
    Ok(())
}

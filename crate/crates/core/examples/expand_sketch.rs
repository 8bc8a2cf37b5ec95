//! One-hot expansion of a b-bit sketch and the matching-count identity.

use bbit_svm::expansion::expand;
use bbit_svm::sketching::{BBitSketch, FamilyId, FamilyKind};

fn main() -> bbit_svm::Result<()> {
    let family = FamilyId::new(FamilyKind::Exact, 1 << 16, 0)?;
    let a = BBitSketch::from_parts(family, 2, vec![1, 0, 3]);
    let b = BBitSketch::from_parts(family, 2, vec![1, 2, 3]);

    let ea = expand(&a, false)?;
    let bits: Vec<u8> = ea.to_dense().iter().map(|&x| x as u8).collect();
    println!("{:?} -> {bits:?}", a.values());

    // positions 0 and 2 agree
    let eb = expand(&b, false)?;
    println!("dot = {}, shared = {}", ea.dot(&eb), ea.shared_support(&eb));
    println!(
        "normalized dot = {:.4}",
        expand(&a, true)?.dot(&expand(&b, true)?)
    );
    Ok(())
}

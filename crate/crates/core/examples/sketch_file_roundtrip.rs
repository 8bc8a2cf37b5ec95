//! Sketch an svmlight file, write the packed sketch file and read it back.

use std::io::Cursor;

use bbit_svm::dataio::{load_svmlight, payload_len, SketchMatrix};
use bbit_svm::sketching::{sketch_dataset, FamilyKind};

const DATA: &str = "\
+1 1:1 2:1 3:1 10:1
-1 4:1 5:1 6:1
+1 1:1 2:1 7:1 10:0.5
-1 5:1 6:1 8:1 9:1
";

fn main() -> bbit_svm::Result<()> {
    let data = load_svmlight(DATA.as_bytes(), None)?;
    let (k, b) = (12, 3);
    let sketches = sketch_dataset(&data, k, b, FamilyKind::Exact, 2024)?;

    let bytes = sketches.to_bytes();
    println!(
        "n={} k={k} b={b}: payload {} bytes (formula {}), file {} bytes",
        sketches.n(),
        sketches.payload().len(),
        payload_len(sketches.n() as u64, k as u64, b),
        bytes.len()
    );

    let back = SketchMatrix::read_from(Cursor::new(&bytes))?;
    assert_eq!(back, sketches);
    for i in 0..back.n() {
        let row: Vec<u16> = back.row_values(i).collect();
        println!("row {i} (|S|={}): {row:?}", back.cardinality(i));
    }
    Ok(())
}

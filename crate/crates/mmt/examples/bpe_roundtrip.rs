//! Learn byte-pair merges from a toy corpus, segment a sentence and put it
//! back together.

use mmt::data::BpeModel;

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn main() -> mmt::Result<()> {
    let corpus: Vec<Vec<String>> = [
        "the lowest low is lower than the lowest high",
        "newer newest new news",
        "slow slower slowest",
    ]
    .iter()
    .map(|s| toks(s))
    .collect();

    let model = BpeModel::train(&corpus, 12)?;
    println!("learned merges (in priority order):");
    for (a, b) in model.merges() {
        println!("  {a} + {b}");
    }

    let sentence = toks("the newest slow low");
    let encoded = model.encode(&sentence);
    println!("\nencoded: {}", encoded.join(" "));
    let decoded = BpeModel::decode(&encoded);
    println!("decoded: {}", decoded.join(" "));
    assert_eq!(decoded, sentence);
    Ok(())
}

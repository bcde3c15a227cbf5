// Build the base, medium and all training mixes and split one 80/20.

use cfpairs::dataset::mix::{build_mix, MixName, MixSpec};
use cfpairs::dataset::split::split_train_val;
use cfpairs::fixtures::synthetic_samples;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (coco, cfs) = synthetic_samples(17_410, 17_410)?;
    for name in [MixName::Base, MixName::Medium, MixName::All] {
        let mix = build_mix(&MixSpec::preset(name, 0)?, &coco, &cfs)?;
        println!("{name:?}: {} samples", mix.len());
    }
    let base = build_mix(&MixSpec::preset(MixName::Base, 0)?, &coco, &cfs)?;
    let (train, val) = split_train_val(&base, 0.8, 0)?;
    println!("base split: train {} / val {}", train.len(), val.len());
    Ok(())
}

fn main() {
    run_example().unwrap();
}

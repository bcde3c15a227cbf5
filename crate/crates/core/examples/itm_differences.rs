// ITM score differences for counterfactual vs. random pairs, binned.

use cfpairs::backends::{BackendSuite, MockDescriptor};
use cfpairs::backends::mock::MockPairGenerator;
use cfpairs::eval::{diff_histogram, itm_diffs, ItmTuple};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let desc = MockDescriptor { dim: 16, seed: 2 };
    let suite = BackendSuite::mock(desc);
    let render = MockPairGenerator::new(desc);
    let rows = [
        ("A cat sitting on the table", "A dog sitting on the table", "A bus parked on the street"),
        ("A man riding a horse", "A woman riding a horse", "A pizza on a plate"),
        ("A boat near the beach", "A kite near the beach", "A clock on the wall"),
    ];
    let mut tuples = Vec::new();
    for (i, (c_o, c_c, c_r)) in rows.iter().enumerate() {
        let (i_o_s, i_c_s) = suite.pair_generator.generate_pair(c_o, c_c, 0.6, i as u64)?;
        tuples.push(ItmTuple {
            c_o: c_o.to_string(),
            i_o: render.render(c_o, 100 + i as u64)?,
            i_o_s,
            c_c: c_c.to_string(),
            i_c_s,
            c_r: c_r.to_string(),
            i_r: render.render(c_r, 200 + i as u64)?,
        });
    }
    let samples = itm_diffs(&tuples, suite.itm_scorer.as_ref())?;
    println!("IR_r {:?}\nIR_c {:?}", samples.ir_random, samples.ir_cf);
    println!("TR_r {:?}\nTR_c {:?}", samples.tr_random, samples.tr_cf);
    let hist = diff_histogram(&samples, 4)?;
    for (metric, h) in &hist.metrics {
        println!("{metric}: counts {:?}, below zero {:.2}", h.counts, h.fraction_below_zero);
    }
    print!("{}", hist.to_csv("ir_cf")?);
    Ok(())
}

fn main() {
    run_example().unwrap();
}

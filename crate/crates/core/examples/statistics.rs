// Pearson correlation with p-value and one-tailed t-tests.

use cfpairs::eval::{format_percent, one_tailed_t_test, one_tailed_t_test_with, pearson_with_p, TTestKind};
use cfpairs::eval::labels::error_rate;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // label overlap per dataset, one point per mix
    let freq = [3446.0, 354.0, 744.0, 398.0, 887.0, 28.0];
    let x: Vec<f64> = freq.iter().flat_map(|f| [*f; 3]).collect();
    let y = [
        2.50, 2.63, 1.80, 2.31, 2.55, 2.45, 1.78, 1.52, 1.16, 0.65, 0.36, -0.29, 0.41, -0.03, -0.37, -1.04, -2.05, -2.11,
    ];
    let (r, p) = pearson_with_p(&x, &y)?;
    println!("pearson r = {r:.3}, p = {p:.3}");

    let baseline = [61.41, 61.6, 60.72, 61.28, 60.93, 61.48, 61.13, 60.65];
    let treatment = [62.13, 61.25, 60.99, 61.67, 61.52, 62.13, 61.2, 61.41];
    let welch = one_tailed_t_test(&baseline, &treatment)?;
    let paired = one_tailed_t_test_with(&baseline, &treatment, TTestKind::Paired)?;
    println!("welch t = {:.3}, p = {:.4}", welch.t_statistic, welch.p_value);
    println!("paired t = {:.3}, p = {:.4}", paired.t_statistic, paired.p_value);

    let rate = error_rate(4117, 1864)?;
    println!("taxonomy error rate {rate:.4} ({})", format_percent(rate, 1));
    Ok(())
}

fn main() {
    run_example().unwrap();
}

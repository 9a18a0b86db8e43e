fn main() {
    let tables: [(&str, Vec<f64>); 4] = [
        ("db1", vec![std::f64::consts::FRAC_1_SQRT_2; 2]),
        ("db2", vec![0.48296291314469025, 0.8365163037378079, 0.22414386804185735, -0.12940952255092145]),
        ("db3", vec![0.3326705529509569, 0.8068915093133388, 0.4598775021193313, -0.13501102001039084, -0.08544127388224149, 0.035226291882100656]),
        ("db4", vec![0.23037781330885523, 0.7148465705525415, 0.6308807679295904, -0.02798376941698385, -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278]),
    ];
    for (name, h) in tables {
        let sum: f64 = h.iter().sum();
        let energy: f64 = h.iter().map(|x| x * x).sum();
        println!("{name}: sum-sqrt2 = {:.2e}, energy-1 = {:.2e}", sum - std::f64::consts::SQRT_2, energy - 1.0);
    }
}

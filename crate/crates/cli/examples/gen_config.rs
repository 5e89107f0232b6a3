fn main() {
    let cfg = tmfield::synth::ScenarioConfig::table_one(42);
    println!("{}", toml::to_string_pretty(&cfg).unwrap());
}

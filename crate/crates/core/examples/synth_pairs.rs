//! Build degraded/clean spectrogram training pairs from a few synthetic utterances
//! and write them as RSPG shards.

use radiomic::io::load_tensor;
use radiomic::synth::{write_shards, PairGenerator, SynthConfig, SYNTH_RATE};
use radiomic::waveforms::speech;

fn main() -> radiomic::Result<()> {
    let files = (0..4)
        .map(|i| (format!("utt{i}.wav"), speech(100 + i, SYNTH_RATE, 3.0)))
        .collect();
    let config = SynthConfig::default();
    println!("config digest {}", config.digest());
    let generator = PairGenerator::from_signals(files, config, 9)?;
    let pair = generator.pair(0)?;
    println!("pair 0: {:?}", pair.metadata);

    let dir = std::env::temp_dir().join("radiomic-shards");
    let shards = write_shards(&generator, 40, &dir)?;
    let (tensor, meta) = load_tensor(&shards[0])?;
    println!("{} -> dims {:?}, first_index {}", shards[0].display(), tensor.dims, meta["first_index"]);
    Ok(())
}

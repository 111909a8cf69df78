//! Round trips of every on-disk format.

use arel::checkpoint::Checkpoint;
use arel::dataset::{format_dataset, parse_dataset, read_dataset, write_dataset};
use arel::reports::LogFile;
use arel::vocab_file::{format_vocab, parse_vocab, read_vocab, write_vocab};
use arel_core::harness::{build_vocab, generate_corpus, CorpusSpec};
use arel_core::numerics::{Activation, ParamStore};
use arel_core::objectives::{LogRecord, Observer};
use arel_core::policy::{Policy, PolicyDims};
use arel_core::reward::{RewardDims, RewardModel};

fn corpus() -> Vec<arel_core::policy::RawAlbum> {
    generate_corpus(&CorpusSpec {
        n_albums: 30,
        d_img: 7,
        seed: 9,
        ..CorpusSpec::default()
    })
    .unwrap()
}

#[test]
fn dataset_round_trip_is_exact() {
    let albums = corpus();
    let text = format_dataset(&albums).unwrap();
    assert_eq!(parse_dataset(&text).unwrap(), albums);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.tsv");
    write_dataset(&path, &albums).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), albums);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn vocabulary_round_trip() {
    let vocab = build_vocab(&corpus(), 2).unwrap();
    assert_eq!(parse_vocab(&format_vocab(&vocab)).unwrap(), vocab);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vocab.txt");
    write_vocab(&path, &vocab).unwrap();
    assert_eq!(read_vocab(&path).unwrap(), vocab);
}

fn bits(store: &ParamStore) -> Vec<u64> {
    store.flat_values().into_iter().map(f64::to_bits).collect()
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let vocab = build_vocab(&corpus(), 0).unwrap();
    let mut policy = Policy::new(PolicyDims::desk(vocab.len(), 7), 3).unwrap();
    // awkward values: subnormals, negative zero, long mantissas
    let id = policy.store().ids().next().unwrap();
    let data = policy.store_mut().value_mut(id).data_mut();
    data[0] = f64::MIN_POSITIVE / 3.0;
    data[1] = -0.0;
    data[2] = 0.1 + 0.2;
    let reward = RewardModel::new(
        RewardDims {
            activation: Activation::Tanh,
            ..RewardDims::desk(vocab.len(), 7)
        },
        4,
    )
    .unwrap();
    let cp = Checkpoint { vocab, policy, reward };
    let dir = tempfile::tempdir().unwrap();
    cp.save(dir.path()).unwrap();
    let back = Checkpoint::load(dir.path()).unwrap();
    assert_eq!(back.vocab, cp.vocab);
    assert_eq!(back.policy.dims(), cp.policy.dims());
    assert_eq!(back.reward.dims(), cp.reward.dims());
    assert_eq!(bits(back.policy.store()), bits(cp.policy.store()));
    assert_eq!(bits(back.reward.store()), bits(cp.reward.store()));
    let again = tempfile::tempdir().unwrap();
    back.save(again.path()).unwrap();
    for name in ["config.txt", "vocab.txt", "policy.manifest", "policy.bin", "reward.manifest", "reward.bin"] {
        assert_eq!(
            std::fs::read(dir.path().join(name)).unwrap(),
            std::fs::read(again.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn checkpoint_rejects_truncated_values() {
    let vocab = build_vocab(&corpus(), 0).unwrap();
    let cp = Checkpoint {
        policy: Policy::new(PolicyDims::desk(vocab.len(), 7), 1).unwrap(),
        reward: RewardModel::new(RewardDims::desk(vocab.len(), 7), 2).unwrap(),
        vocab,
    };
    let dir = tempfile::tempdir().unwrap();
    cp.save(dir.path()).unwrap();
    let bin = dir.path().join("reward.bin");
    let bytes = std::fs::read(&bin).unwrap();
    std::fs::write(&bin, &bytes[..bytes.len() - 8]).unwrap();
    assert!(Checkpoint::load(dir.path()).is_err());
}

#[test]
fn log_lines_round_trip() {
    let records = [
        LogRecord {
            episode: 1,
            mode: "arel/policy".into(),
            loss: -0.123456789012345,
            mean_reward_real: 0.5,
            mean_reward_fake: -1e-300,
            baseline: 0.0,
            wall_ms: 0,
        },
        LogRecord {
            episode: 51,
            mode: "arel/reward".into(),
            loss: 3.0,
            mean_reward_real: 0.25,
            mean_reward_fake: 0.125,
            baseline: 1.0 / 3.0,
            wall_ms: 12,
        },
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.log");
    let mut log = LogFile::create(&path, false).unwrap();
    assert_eq!(log.now_ms(), 0);
    for r in &records {
        log.record(r).unwrap();
    }
    log.finish().unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let back: Vec<LogRecord> = text.lines().map(|l| LogRecord::parse(l).unwrap()).collect();
    assert_eq!(back, records);
    assert!(LogRecord::parse("episode=1 mode=x").is_err());
}

import dataclasses
import json

import numpy as np
import pytest

from mingts import losses
from mingts.codec import TagLabel, encode_grid
from mingts.corpus import Dataset, Sentence, Split, parse_aste_file, triplet
from mingts.losses import FocalParams
from mingts.model import (
    UNK,
    ConfigError,
    ModelConfig,
    PairHead,
    TrainingDiverged,
    Variant,
    argmax_grid,
    build_vocab,
    encode_tokens,
    init_model,
    load_checkpoint,
    loss_and_grads,
    pair_logits,
    parameters_checksum,
    predict_grid,
    predict_triplets,
    save_checkpoint,
    train,
)
from mingts.synthetic import generate_corpus

from oracles import relative_error

SMALL = generate_corpus(seed=5, size=8)


def small_model(d=6, window=1, seed=0):
    cfg = ModelConfig(d=d, window=window, seed=seed)
    return init_model(cfg, build_vocab(SMALL))


def test_window_zero_encoder():
    enc, _ = small_model(window=0)
    ids = enc.ids(SMALL.sentences[0].tokens)
    e = enc.emb[ids]
    np.testing.assert_allclose(encode_tokens(enc, ids), e + e @ enc.mix.T)


def test_identical_tokens_far_apart_have_equal_rows():
    enc, _ = small_model(window=1)
    tokens = ["the", "food", "was", "great", "the", "food", "was", "great"]
    h = encode_tokens(enc, enc.ids(tokens))
    np.testing.assert_array_equal(h[1:3], h[5:7])


def test_encoder_deterministic_and_rejects_bad_ids():
    a, _ = small_model(seed=3)
    b, _ = small_model(seed=3)
    ids = a.ids(SMALL.sentences[1].tokens)
    assert encode_tokens(a, ids).tobytes() == encode_tokens(b, ids).tobytes()
    with pytest.raises(ValueError):
        encode_tokens(a, [len(a.vocab)])


def test_unknown_tokens_map_to_unk():
    enc, _ = small_model()
    assert list(enc.ids(["zzz", "food"])) == [enc.vocab[UNK], enc.vocab["food"]]


def test_predict_grid_normalised():
    enc, head = small_model()
    h = encode_tokens(enc, enc.ids(SMALL.sentences[0].tokens))
    probs = predict_grid(head, h)
    n = h.shape[0]
    off = ~np.eye(n, dtype=bool)
    np.testing.assert_allclose(probs.sum(-1)[off], 1.0, atol=1e-9)
    assert np.all(probs[np.eye(n, dtype=bool)] == 0)


def test_zero_head_gives_uniform_probabilities_and_empty_prediction():
    enc, head = small_model()
    head = PairHead(np.zeros_like(head.weight), np.zeros(5))
    h = encode_tokens(enc, enc.ids(SMALL.sentences[0].tokens))
    probs = predict_grid(head, h)
    off = ~np.eye(h.shape[0], dtype=bool)
    np.testing.assert_allclose(probs[off], 0.2)
    assert predict_triplets(enc, head, SMALL.sentences[0]) == (set(), [])


def test_duplicate_rows_give_identical_probabilities():
    _, head = small_model()
    rng = np.random.default_rng(0)
    h = rng.normal(size=(5, 6))
    h[3] = h[1]
    probs = predict_grid(head, h)
    for j in (0, 2, 4):
        np.testing.assert_array_equal(probs[1, j], probs[3, j])


def test_argmax_invariant_to_constant_shift():
    enc, head = small_model()
    h = encode_tokens(enc, enc.ids(SMALL.sentences[2].tokens))
    logits = pair_logits(head, h)
    a = argmax_grid(losses.softmax(logits))
    b = argmax_grid(losses.softmax(logits + np.random.default_rng(1).normal(size=logits.shape[:2])[..., None]))
    np.testing.assert_array_equal(a, b)
    assert np.all(np.diagonal(a) == TagLabel.MSK)


def _flat_params(enc, head):
    return [enc.emb, enc.mix, head.weight, head.bias]


@pytest.mark.parametrize("variant", list(Variant))
def test_loss_and_grads_finite_differences(variant):
    enc, head = small_model(d=4, window=1, seed=2)
    s = SMALL.sentences[0]
    cfg = ModelConfig(d=4, window=1, beta=0.7, variant=variant, tau=0.5, margin=2.0)
    ids = enc.ids(s.tokens)
    grid = encode_grid(s.n, s.gold)
    mask = losses.build_contrastive_mask(losses.token_classes(s.n, s.gold))
    focal = FocalParams((0.5, 1.0, 1.5, 1.2, 0.8), 1.5)
    step = loss_and_grads(enc, head, ids, grid, mask, cfg, focal)
    names = ["emb", "mix", "weight", "bias"]
    eps = 1e-5
    for name, arr in zip(names, _flat_params(enc, head)):
        numeric = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + eps
            up = loss_and_grads(enc, head, ids, grid, mask, cfg, focal).total
            arr[idx] = orig - eps
            down = loss_and_grads(enc, head, ids, grid, mask, cfg, focal).total
            arr[idx] = orig
            numeric[idx] = (up - down) / (2 * eps)
        assert relative_error(step.grads[name], numeric) < 1e-4, name


def test_small_step_decreases_loss():
    enc, head = small_model(d=8, window=1, seed=4)
    cfg = ModelConfig(d=8, window=1, beta=1.0)
    focal = FocalParams()
    s = SMALL.sentences[3]
    args = (enc.ids(s.tokens), encode_grid(s.n, s.gold),
            losses.build_contrastive_mask(losses.token_classes(s.n, s.gold)), cfg, focal)
    step = loss_and_grads(enc, head, *args)
    lr = 0.1
    for _ in range(4):
        trial_enc = dataclasses.replace(enc, emb=enc.emb - lr * step.grads["emb"], mix=enc.mix - lr * step.grads["mix"])
        trial_head = PairHead(head.weight - lr * step.grads["weight"], head.bias - lr * step.grads["bias"])
        if loss_and_grads(trial_enc, trial_head, *args).total < step.total:
            break
        lr /= 10
    else:
        pytest.fail("no decrease after 3 learning-rate reductions")


def test_zero_epochs_keeps_initialisation():
    cfg = ModelConfig(d=6, epochs=0, seed=9)
    enc, head, report = train(cfg, SMALL)
    init_enc, init_head = init_model(cfg, build_vocab(SMALL))
    assert report.records == []
    assert report.checksum == parameters_checksum(init_enc, init_head)


def test_training_is_deterministic():
    cfg = ModelConfig(d=8, epochs=3, seed=1, lr_encoder=0.1, lr_head=0.5)
    a = train(cfg, SMALL)[2]
    b = train(cfg, SMALL)[2]
    assert a.to_json() == b.to_json()


def test_training_rejects_invalid_gold():
    bad = Dataset("bad", Split.TRAIN, (
        Sentence("x", "a b c d", ("a", "b", "c", "d"),
                 frozenset({triplet((0, 1), (3, 3), "POS"), triplet((1, 1), (2, 2), "NEG")})),
    ))
    with pytest.raises(ValueError, match="sentence 'x'"):
        train(ModelConfig(d=4, epochs=1), bad)


def test_divergence_guard():
    cfg = ModelConfig(d=4, epochs=5, lr_encoder=1e6, lr_head=1e6, seed=0)
    with np.errstate(all="ignore"), pytest.warns(UserWarning, match="clamped"), pytest.raises(TrainingDiverged, match="non-finite loss"):
        train(cfg, SMALL)


def test_dev_selection_picks_best_epoch():
    cfg = ModelConfig(d=8, epochs=6, seed=2, lr_encoder=0.3, lr_head=2.0, focal_alpha=(1,) * 5)
    enc, head, report = train(cfg, SMALL, dev=SMALL)
    dev_scores = [r.dev_f1 for r in report.records]
    assert report.selected_epoch == 1 + int(np.argmax(dev_scores))


def test_overfit_single_sentence_decodes_gold():
    data = parse_aste_file("the pasta was great but the wine list was awful .####"
                           "[([1], [3], 'POS'), ([6, 7], [9], 'NEG')]")
    cfg = ModelConfig(d=16, window=3, epochs=600, lr_encoder=0.1, lr_head=2.0, beta=0.1,
                      focal_alpha=(1,) * 5, seed=0)
    enc, head, report = train(cfg, data)
    assert report.final_train_f1 == 1.0
    assert predict_triplets(enc, head, data.sentences[0]) == (set(data.sentences[0].gold), [])


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    cfg = ModelConfig(d=8, epochs=2, seed=4, lr_encoder=0.1, lr_head=0.5, variant="masked_distance")
    enc, head, _ = train(cfg, SMALL)
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, cfg, enc, head)
    cfg2, enc2, head2 = load_checkpoint(path)
    assert cfg2 == cfg
    assert parameters_checksum(enc2, head2) == parameters_checksum(enc, head)
    save_checkpoint(tmp_path / "again.json", cfg2, enc2, head2)
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_fixture_checkpoint_predictions(fixtures_dir):
    _, enc, head = load_checkpoint(fixtures_dir / "toy_checkpoint.json")
    data = parse_aste_file((fixtures_dir / "toy_train.txt").read_text())
    expected = json.loads((fixtures_dir / "toy_expected.json").read_text())
    for s in data:
        pred, _ = predict_triplets(enc, head, s)
        got = sorted([[t.aspect.start, t.aspect.end], [t.opinion.start, t.opinion.end], t.polarity.value] for t in pred)
        assert got == expected[s.id]


@pytest.mark.parametrize(
    "raw, field",
    [({"d": 1}, "d"), ({"window": -1}, "window"), ({"lr_head": 0}, "lr_head"),
     ({"variant": "cosine"}, "variant"), ({"bogus": 1}, "bogus"), ({"focal_alpha": [0, 0, 0, 0, 0]}, "focal_alpha")],
)
def test_config_validation_names_field(raw, field):
    with pytest.raises(ConfigError, match=field):
        ModelConfig.from_dict(raw)

import numpy as np
import pytest

from chromadiff import ranker as R
from chromadiff.codec import IdentityCodec, color_latent
from chromadiff.colorspace import colorfulness, to_grayscale
from chromadiff.embedders import FeatureEmbedder


class _ClrEmbedder:
    """One-feature embedder: the image's colorfulness."""

    dim = 1

    def embed_image(self, img):
        return np.array([colorfulness(img)])


class _ConstEmbedder:
    dim = 2

    def embed_image(self, img):
        return np.array([1.0, -1.0])


def _mild_color_image(rng, size=24):
    # chroma small enough that 1.4x scaling stays inside [0, 1]
    return 0.5 + 0.25 * (rng.random((size, size, 3)) - 0.5)


class TestRankerModel:
    def test_default_grid(self):
        assert R.RANKER_GRID == (0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4)

    def test_validation(self):
        with pytest.raises(ValueError, match="finite"):
            R.RankerModel(weights=[np.inf], bias=0.0, embedder_id="x")
        with pytest.raises(ValueError, match="increasing"):
            R.RankerModel(weights=[1.0], bias=0.0, embedder_id="x", grid=(1.0, 0.9))
        with pytest.raises(ValueError, match="increasing"):
            R.RankerModel(weights=[1.0], bias=0.0, embedder_id="x", grid=())

    def test_zero_weights_score_equals_bias(self, rng):
        model = R.RankerModel(
            weights=np.zeros(61), bias=2.5, embedder_id="features",
            embedder=FeatureEmbedder(),
        )
        assert R.score(rng.random((12, 12, 3)), model) == 2.5
        assert R.score(rng.random((30, 18, 3)), model) == 2.5

    def test_save_load_json_roundtrip(self, tmp_path, rng):
        emb = FeatureEmbedder()
        model = R.RankerModel(
            weights=rng.normal(size=emb.dim), bias=-0.75,
            embedder_id="features-v1", embedder=emb,
        )
        path = tmp_path / "ranker.json"
        model.save(path)
        import json

        payload = json.loads(path.read_text())
        assert set(payload) == {"weights", "bias", "embedder_id", "grid"}
        reloaded = R.RankerModel.load(path, embedder=emb)
        img = rng.random((16, 16, 3))
        assert R.score(img, reloaded) == R.score(img, model)
        assert reloaded.grid == model.grid

    def test_score_needs_embedder(self, rng):
        model = R.RankerModel(weights=[0.0], bias=0.0, embedder_id="x")
        with pytest.raises(ValueError, match="embedder"):
            R.score(rng.random((4, 4, 3)), model)


class TestTrainRanker:
    def test_linearly_separable_pairs_reach_perfect_training_accuracy(self, rng):
        emb = FeatureEmbedder()
        pairs = []
        for _ in range(60):
            a, b = rng.random((16, 16, 3)), rng.random((16, 16, 3))
            if abs(a[..., 0].mean() - b[..., 0].mean()) < 0.01:
                continue
            pairs.append(R.PairLabel(a, b, "a" if a[..., 0].mean() > b[..., 0].mean() else "b"))
        model = R.train_ranker(pairs, emb)
        assert R.pair_accuracy(model, pairs) == 1.0

    def test_single_pair_preferred_scores_strictly_higher(self, rng):
        emb = FeatureEmbedder()
        a, b = rng.random((16, 16, 3)), rng.random((16, 16, 3))
        model = R.train_ranker([R.PairLabel(a, b, "b")], emb)
        assert R.score(b, model) > R.score(a, model)

    def test_empty_pairs_rejected(self):
        with pytest.raises(ValueError, match="pair"):
            R.train_ranker([], FeatureEmbedder())

    def test_degenerate_embeddings_abort_with_diagnostics(self, rng):
        pairs = [
            R.PairLabel(rng.random((8, 8, 3)), rng.random((8, 8, 3)), "a")
            for _ in range(5)
        ]
        with pytest.raises(R.RankerTrainingError, match="degenerate"):
            R.train_ranker(pairs, _ConstEmbedder())

    def test_label_flip_negates_ordering(self, rng):
        emb = FeatureEmbedder()
        imgs = rng.random((40, 16, 16, 3))
        pairs = R.synthetic_scale_pairs(imgs, n_pairs=120, seed=3)
        flipped = [
            R.PairLabel(p.image_a, p.image_b, "b" if p.preferred == "a" else "a")
            for p in pairs
        ]
        m1 = R.train_ranker(pairs[:100], emb)
        m2 = R.train_ranker(flipped[:100], emb)
        assert np.allclose(m2.weights, -m1.weights, rtol=1e-3, atol=1e-6)
        flips = 0
        for p in pairs[100:]:
            d1 = R.score(p.image_a, m1) - R.score(p.image_b, m1)
            d2 = R.score(p.image_a, m2) - R.score(p.image_b, m2)
            flips += (d1 > 0) != (d2 > 0)
        assert flips >= 18  # of 20 held-out pairs

    def test_training_beats_zero_model_floor(self, corpus):
        images, _ = corpus
        pairs = R.synthetic_scale_pairs(images[:100], n_pairs=200, seed=1)
        model = R.train_ranker(pairs, FeatureEmbedder())
        assert R.pair_accuracy(model, pairs) >= 0.5


class TestSyntheticPreferenceTask:
    def test_heldout_accuracy_at_least_ninety_percent(self, corpus):
        # the stand-in for human preference labels: renditions whose
        # colorfulness lands closer to 40 win
        images, _ = corpus
        pairs = R.synthetic_scale_pairs(images[:300], n_pairs=600, seed=0)
        train, held = pairs[:500], pairs[500:]
        model = R.train_ranker(train, FeatureEmbedder())
        acc = R.pair_accuracy(model, held)
        assert acc >= 0.90

    def test_generator_respects_min_gap_and_count(self, rng):
        imgs = rng.random((20, 16, 16, 3))
        pairs = R.synthetic_scale_pairs(imgs, n_pairs=50, seed=0, min_gap=2.0)
        assert len(pairs) == 50
        for p in pairs[:10]:
            da = abs(colorfulness(p.image_a) - 40.0)
            db = abs(colorfulness(p.image_b) - 40.0)
            assert abs(da - db) >= 2.0
            assert p.preferred == ("a" if da < db else "b")

    def test_generator_raises_when_starved(self, rng):
        imgs = np.zeros((3, 8, 8, 3))  # gray: every rendition has CLR 0
        with pytest.raises(R.RankerTrainingError, match="unambiguous"):
            R.synthetic_scale_pairs(imgs, n_pairs=10, seed=0)


class TestRankScales:
    def test_constant_scorer_returns_smallest_scale(self, rng):
        model = R.RankerModel(
            weights=np.zeros(61), bias=1.0, embedder_id="features",
            embedder=FeatureEmbedder(),
        )
        img = _mild_color_image(rng)
        codec = IdentityCodec()
        zg = codec.encode(to_grayscale(img))
        delta = color_latent(codec.encode(img), zg)
        best, scored = R.rank_scales(zg, delta, model, codec)
        assert best == 0.7
        assert [s for s, _ in scored] == list(R.RANKER_GRID)

    def test_colorfulness_scorer_returns_largest_scale(self, rng):
        model = R.RankerModel(
            weights=np.array([1.0]), bias=0.0, embedder_id="clr",
            embedder=_ClrEmbedder(),
        )
        img = _mild_color_image(rng)
        codec = IdentityCodec()
        zg = codec.encode(to_grayscale(img))
        delta = color_latent(codec.encode(img), zg)
        best, scored = R.rank_scales(zg, delta, model, codec)
        assert best == 1.4
        values = [v for _, v in scored]
        assert values == sorted(values)

    def test_single_element_grid(self, rng):
        model = R.RankerModel(
            weights=np.array([1.0]), bias=0.0, embedder_id="clr",
            grid=(0.9,), embedder=_ClrEmbedder(),
        )
        img = _mild_color_image(rng)
        codec = IdentityCodec()
        zg = codec.encode(to_grayscale(img))
        delta = color_latent(codec.encode(img), zg)
        best, scored = R.rank_scales(zg, delta, model, codec)
        assert best == 0.9 and len(scored) == 1

    def test_argmax_shift_invariance_exact(self, rng):
        # adding any constant to every score must not move the argmax
        emb = _ClrEmbedder()
        img = _mild_color_image(rng)
        codec = IdentityCodec()
        zg = codec.encode(to_grayscale(img))
        delta = color_latent(codec.encode(img), zg)
        base = R.RankerModel(weights=np.array([0.031]), bias=0.0,
                             embedder_id="clr", embedder=emb)
        best0, scored0 = R.rank_scales(zg, delta, base, codec)
        for c in (-3.0, 0.5, 10.0, 1000.0):
            shifted = R.RankerModel(weights=np.array([0.031]), bias=c,
                                    embedder_id="clr", embedder=emb)
            best, scored = R.rank_scales(zg, delta, shifted, codec)
            assert best == best0
            order0 = np.argsort([v for _, v in scored0])
            order = np.argsort([v for _, v in scored])
            assert np.array_equal(order, order0)

    def test_deterministic(self, rng):
        model = R.RankerModel(
            weights=np.array([1.0]), bias=0.0, embedder_id="clr",
            embedder=_ClrEmbedder(),
        )
        img = _mild_color_image(rng)
        codec = IdentityCodec()
        zg = codec.encode(to_grayscale(img))
        delta = color_latent(codec.encode(img), zg)
        r1 = R.rank_scales(zg, delta, model, codec)
        r2 = R.rank_scales(zg, delta, model, codec)
        assert r1[0] == r2[0] and r1[1] == r2[1]


class TestPairFileIO:
    def test_roundtrip(self, tmp_path, rng):
        imgs = rng.random((6, 16, 16, 3))
        pairs = R.synthetic_scale_pairs(imgs, n_pairs=8, seed=2)
        labels = R.write_pair_file(pairs, tmp_path / "labels")
        loaded = R.read_pair_file(labels)
        assert len(loaded) == 8
        for orig, back in zip(pairs, loaded):
            assert back.preferred == orig.preferred
            # PNG storage quantizes to 8 bits
            assert np.abs(back.image_a - orig.image_a).max() <= 0.5 / 255 + 1e-12
            assert np.abs(back.image_b - orig.image_b).max() <= 0.5 / 255 + 1e-12

    def test_pair_accuracy_validates(self):
        model = R.RankerModel(weights=[0.0], bias=0.0, embedder_id="x",
                              embedder=_ClrEmbedder())
        with pytest.raises(ValueError, match="no pairs"):
            R.pair_accuracy(model, [])

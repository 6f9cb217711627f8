"""Train the feed-forward neural language model on one synthetic author.

Shows the training curve, the probability a trained model assigns to
likely vs unlikely continuations, and bit-exact model storage.

Run:  python demos/02_neural_lm.py
"""

import math
import tempfile
from pathlib import Path

from authorlm import nnlm, synthetic
from authorlm import textproc as tp
from authorlm.evaluation import perplexity

# One Markov author with a spiky next-word distribution per state: there
# is real sequential structure for the network to learn.
author = synthetic.random_markov_author(
    "demo", synthetic.default_lexicon(20), seed=42, concentration=0.1
)
[corpus] = synthetic.generate_synthetic_corpus([author], seed=1, sentence_count=400)
tokens = tp.preprocess_sentences(corpus.sentences, stemming=False)
vocab = tp.build_vocabulary(tokens)
processed = tp.encode(tokens, vocab, order=4)

assignment = tp.split(len(processed), seed=0)
train_samples = tp.extract_samples(processed, assignment.train)
val_samples = tp.extract_samples(processed, assignment.validation)
test_sentences = [processed.sentences[i] for i in assignment.test]
print(f"V={vocab.size}, {len(train_samples)} training samples")

config = nnlm.NnlmConfig(
    vocab_size=vocab.size,
    order=4,            # three context words predict the fourth
    embed_dim=12,
    hidden_dim=32,
    batch_size=64,
    learning_rate=0.3,
    momentum=0.9,
    max_epochs=15,
    patience=4,
    init_seed=0,
)
model, history = nnlm.train(config, train_samples, val_samples)

print("\nepoch  train-CE  valid-CE  valid-PP")
for h in history:
    print(f"{h.epoch:5d}  {h.train_loss:8.4f}  {h.validation_loss:8.4f}"
          f"  {math.exp(h.validation_loss):8.2f}")

report = perplexity(model, test_sentences)
print(f"\ntest perplexity over {report.token_count} tokens: {report.perplexity:.2f}")
print(f"(a blind uniform guess would score {vocab.size}.)")

# Query the model directly: distribution over the next word for a context
# actually seen in training data.
context = train_samples.contexts[0]
dist = model.distribution(context)
top = dist.argsort()[::-1][:3]
print(f"\nafter {vocab.decode(context)}:")
for wid in top:
    print(f"    {vocab.words[wid]:8s} p={dist[wid]:.3f}")
print(f"    (row sums to {dist.sum():.12f})")

# Models round-trip bit-exactly through their binary container.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.nnlm"
    nnlm.save_model(model, path)
    restored = nnlm.load_model(path)
    assert restored.log_prob(context, 3) == model.log_prob(context, 3)
    print(f"\nsaved {path.stat().st_size} bytes; reloaded queries are identical")

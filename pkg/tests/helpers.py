"""Shared test fixtures: IDX writers, a surrogate digit corpus, and an
independently written standard GAN used as a step-for-step reference.

The digit surrogate exercises the full image pipeline (IDX parsing, digit
pair selection, PU splits, 784-dim training) without shipping real scan
data: each digit class is a fixed random template plus per-sample intensity
jitter and pixel noise.
"""

import struct

import numpy as np

from genpu.autodiff import Tape, adam_step


def write_idx_pair(directory, images, labels):
    """Write a big-endian IDX image/label pair; returns the two paths."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    img_path = directory / "images-idx3-ubyte"
    lbl_path = directory / "labels-idx1-ubyte"
    with open(img_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, rows, cols))
        f.write(images.tobytes())
    with open(lbl_path, "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())
    return str(img_path), str(lbl_path)


def make_surrogate_digit_files(directory, n_per_digit, digits=(3, 5), seed=0, side=28):
    """Template-plus-noise digit images for two classes, written as IDX files."""
    rng = np.random.default_rng(seed)
    templates = {d: rng.uniform(0, 1, size=(side, side)) ** 2 for d in digits}
    images, labels = [], []
    for d in digits:
        base = templates[d]
        intensity = rng.uniform(0.6, 1.0, size=n_per_digit)
        noise = rng.normal(0, 0.15, size=(n_per_digit, side, side))
        batch = np.clip(base[None] * intensity[:, None, None] + noise, 0, 1)
        images.append((batch * 255).astype(np.uint8))
        labels.append(np.full(n_per_digit, d, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = rng.permutation(len(labels))
    return write_idx_pair(directory, images[order], labels[order])


def reference_gan_step(d, g, opt_d, opt_g, x_real, z_d, z_g, lr):
    """One alternation of a plain one-discriminator GAN.

    Written independently of the game trainer: ascend the discriminator on
    log D(x) + log(1 - D(G(z))), then descend the generator on the
    non-saturating -log D(G(z)) with fresh noise.
    """
    fake = g.apply(z_d)
    tape = Tape()
    s_real = d.on_tape(tape, x_real, logits=True)
    s_fake = d.on_tape(tape, fake, logits=True)
    value = tape.add(tape.mean(tape.log_sigmoid(s_real)), tape.neg(tape.mean(tape.softplus(s_fake))))
    adam_step(d.parameters(), tape.backward(tape.neg(value)), opt_d, lr)

    tape = Tape()
    fake_node = g.on_tape(tape, z_g)
    s = d.on_tape(tape, fake_node, logits=True, trainable=False)
    g_loss = tape.neg(tape.mean(tape.log_sigmoid(s)))
    adam_step(g.parameters(), tape.backward(g_loss), opt_g, lr)

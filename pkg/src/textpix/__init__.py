"""textpix: fixed-length 8-bit image representations of text.

A self-supervised convolutional/attention variational autoencoder maps
variable-length text to a fixed-length latent vector, which is normalized,
quantized, and reshaped into a small grayscale (or RGB) image. A twin-channel
classifier scores semantic similarity between two such images.
"""

__version__ = "0.1.0"

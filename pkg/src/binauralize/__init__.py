"""Mono-to-binaural audio spatialization toolkit.

Subpackages:
  dsp         STFT/ISTFT, complex masks, Griffin-Lim, envelopes, RT60, metrics
  room        shoebox image-source simulator and FFT convolution renderer
  scenegen    synthetic binaural dataset generator (scenes, renders, manifests)
  nn          small numpy autodiff engine and the four sub-networks
  training    losses, example sampler, Adam, training loop
  evaluation  sliding-window inference, metric reports, probes
"""

__version__ = "0.1.0"

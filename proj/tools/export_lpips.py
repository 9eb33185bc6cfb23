#!/usr/bin/env python3
"""Export LPIPS (SqueezeNet 1.1 backbone, v0.1 linear heads) as a libtorch archive.

The archive loads with Lpips::load and `fast eval --lpips`.
"""
import argparse
import os

import torch
import torchvision

SLICES = [(0, 2), (2, 5), (5, 8), (8, 10), (10, 11), (11, 12), (12, 13)]
CHANNELS = [64, 128, 256, 384, 384, 512, 512]


class Net(torch.nn.Module):
    def __init__(self, features, heads):
        super().__init__()
        for i, (lo, hi) in enumerate(SLICES):
            setattr(self, f"slice{i + 1}", torch.nn.Sequential(*[features[j] for j in range(lo, hi)]))
        for i, head in enumerate(heads):
            setattr(self, f"lin{i}", head)
        self.register_buffer("shift", torch.tensor([-0.030, -0.088, -0.188]).view(1, 3, 1, 1))
        self.register_buffer("scale", torch.tensor([0.458, 0.448, 0.450]).view(1, 3, 1, 1))

    def forward(self, x):
        return self.slice1((x - self.shift) / self.scale)


def heads(random):
    convs = [torch.nn.Conv2d(c, 1, 1, bias=False) for c in CHANNELS]
    if random:
        return convs
    import lpips

    state = torch.load(os.path.join(os.path.dirname(lpips.__file__), "weights", "v0.1", "squeeze.pth"),
                       map_location="cpu")
    for i, conv in enumerate(convs):
        conv.weight.data.copy_(state[f"lin{i}.model.1.weight"])
    return convs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", help="destination .pt archive")
    parser.add_argument("--random", action="store_true", help="skip all pretrained weights (format testing only)")
    args = parser.parse_args()

    weights = None if args.random else torchvision.models.SqueezeNet1_1_Weights.IMAGENET1K_V1
    features = torchvision.models.squeezenet1_1(weights=weights).features
    module = Net(features, heads(args.random)).eval()
    torch.jit.script(module).save(args.output)


if __name__ == "__main__":
    main()

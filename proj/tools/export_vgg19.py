#!/usr/bin/env python3
"""Export the VGG-19 perceptual extractor (through conv4_1) as a libtorch archive.

The archive loads with ExtractorConfig::weights (width_divisor 1).
"""
import argparse

import torch
import torchvision


class Extractor(torch.nn.Module):
    def __init__(self, features):
        super().__init__()
        self.features = features
        self.register_buffer("mean", torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1))

    def forward(self, x):
        return self.features((x - self.mean) / self.std)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", help="destination .pt archive")
    parser.add_argument("--random", action="store_true", help="skip the ImageNet download (format testing only)")
    args = parser.parse_args()

    weights = None if args.random else torchvision.models.VGG19_Weights.IMAGENET1K_V1
    vgg = torchvision.models.vgg19(weights=weights)
    module = Extractor(vgg.features[:21]).eval()
    for p in module.parameters():
        p.requires_grad_(False)
    torch.jit.script(module).save(args.output)


if __name__ == "__main__":
    main()

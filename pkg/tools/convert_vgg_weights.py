#!/usr/bin/env python3
"""Convert torchvision VGG-19 weights into the extractor's named-tensor file.

Accepts either a torchvision checkpoint (.pth state dict, full model or
.features) or --download to fetch the pretrained weights via torchvision.

Usage:
    python tools/convert_vgg_weights.py --checkpoint vgg19.pth --out vgg19.vggw
    python tools/convert_vgg_weights.py --download --out vgg19.vggw
    python tools/convert_vgg_weights.py --random --seed 0 --out random.vggw
"""

from __future__ import annotations

import argparse
import sys

from inrstyle.perceptual import (from_torchvision_state_dict, random_weights,
                                 save_weights)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--checkpoint", help="torchvision vgg19 .pth state dict")
    source.add_argument("--download", action="store_true",
                        help="fetch torchvision's pretrained vgg19")
    source.add_argument("--random", action="store_true",
                        help="He-initialized stand-in weights (no pretraining)")
    parser.add_argument("--seed", type=int, default=0, help="seed for --random")
    parser.add_argument("--out", required=True, help="output weight file")
    args = parser.parse_args(argv)

    if args.random:
        tensors = random_weights(seed=args.seed)
    elif args.download:
        from torchvision.models import VGG19_Weights, vgg19
        model = vgg19(weights=VGG19_Weights.IMAGENET1K_V1)
        state = {k: v.numpy() for k, v in model.state_dict().items()}
        tensors = from_torchvision_state_dict(state)
    else:
        import torch
        state = torch.load(args.checkpoint, map_location="cpu", weights_only=True)
        if hasattr(state, "state_dict"):
            state = state.state_dict()
        state = {k: v.numpy() for k, v in state.items()}
        tensors = from_torchvision_state_dict(state)

    save_weights(args.out, tensors)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

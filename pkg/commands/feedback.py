"""Commands around the feedback payload: bit allocation and quantization."""

from __future__ import annotations

import argparse
import logging

import numpy as np

from core.allocation import METHODS, allocate, closed_form_allocation, distortion_terms
from core.channel import ParametricCsi, sample_parametric_csi
from core.config import ScenarioConfig, add_config_arguments
from core.quantizer import (
    BitAllocation,
    build_codebooks,
    decode_payload,
    dequantize,
    encode_payload,
    quantize_csi,
)

from . import emit, settings_from


def add_bit_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("feedback bits")
    for name in ("theta", "tau", "beta", "phi"):
        group.add_argument(f"--bits-{name}", type=int, dest=f"bits_{name}", help=f"bits for {name}")
    group.add_argument("--total-bits", type=int, help="total bits per path, split by --method")
    group.add_argument("--method", choices=METHODS, default="closed", help="allocation policy")


def allocation_from_args(args: argparse.Namespace, scenario: ScenarioConfig) -> BitAllocation:
    explicit = [getattr(args, f"bits_{n}") for n in ("theta", "tau", "beta", "phi")]
    if any(b is not None for b in explicit):
        if any(b is None for b in explicit):
            raise ValueError("give all four of --bits-theta/--bits-tau/--bits-beta/--bits-phi")
        return BitAllocation(*explicit)
    if args.total_bits is None:
        raise ValueError("either --total-bits or the four --bits-* flags are required")
    return allocate(scenario, args.total_bits, args.method)


class FeedbackCommands:
    title = "Feedback"

    def register(self, subparsers: argparse._SubParsersAction) -> None:
        description = "Split a feedback budget across theta, tau, beta and phi"
        parser = subparsers.add_parser("allocate", help=description, description=description)
        parser.add_argument("--total-bits", type=int, required=True, help="total bits per path")
        parser.add_argument("--method", choices=METHODS, default="closed", help="allocation policy")
        add_config_arguments(parser, ScenarioConfig)
        parser.set_defaults(handler=self.allocate)

        description = "Quantize one parametric CSI draw and show its payload"
        parser = subparsers.add_parser("quantize", help=description, description=description)
        add_bit_arguments(parser)
        parser.add_argument("--seed", type=int, help="seed for the CSI draw (default: rng_seed)")
        parser.add_argument("--payload-hex", help="decode this payload instead of drawing a CSI")
        add_config_arguments(parser, ScenarioConfig)
        parser.set_defaults(handler=self.quantize)

    def allocate(self, args: argparse.Namespace) -> int:
        scenario = settings_from(args).scenario
        alloc = allocate(scenario, args.total_bits, args.method)
        theta, tau, beta, phi = alloc.as_tuple()
        report = {
            "method": args.method,
            "total_bits": args.total_bits,
            "Q_theta": theta,
            "Q_tau": tau,
            "Q_beta": beta,
            "Q_phi": phi,
            "objective": distortion_terms(scenario, alloc).total,
        }
        if args.method == "closed":
            report["real_bits"] = closed_form_allocation(scenario, args.total_bits).real_bits
        emit(report)
        return 0

    def quantize(self, args: argparse.Namespace) -> int:
        scenario = settings_from(args).scenario
        alloc = allocation_from_args(args, scenario)
        books = build_codebooks(scenario, alloc)
        if args.payload_hex:
            payload = decode_payload(bytes.fromhex(args.payload_hex), alloc, scenario.n_paths)
            emit({"allocation": alloc.as_tuple(), "indices": payload.indices, "parameters": dequantize(payload, books).as_matrix()})
            return 0
        seed = scenario.rng_seed if args.seed is None else args.seed
        csi: ParametricCsi = sample_parametric_csi(scenario, np.random.default_rng(seed))
        payload, quantized = quantize_csi(csi, books)
        data = encode_payload(payload)
        logging.info("Encoded %s bits into %s bytes", payload.bit_length, len(data))
        error = np.abs(quantized.as_matrix() - csi.as_matrix())
        error[:, [0, 3]] = np.minimum(error[:, [0, 3]], 2 * np.pi - error[:, [0, 3]])
        emit(
            {
                "allocation": alloc.as_tuple(),
                "bit_length": payload.bit_length,
                "payload_hex": data.hex(),
                "indices": payload.indices,
                "parameters": csi.as_matrix(),
                "quantized": quantized.as_matrix(),
                "abs_error": error,
            }
        )
        return 0

"""
Command-line surface: ``python -m cli <subcommand>``.

  synth, train, eval, infer, quantize, gradcheck, ablate
"""

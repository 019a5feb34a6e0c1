"""Run-history store for finished simulation runs"""

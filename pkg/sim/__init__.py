"""Simulation core package"""

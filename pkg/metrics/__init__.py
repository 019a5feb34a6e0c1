"""Metrics package"""

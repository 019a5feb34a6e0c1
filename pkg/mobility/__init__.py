"""Mobility package"""
